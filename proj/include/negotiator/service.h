// Copyright 2026 The Negotiator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NEGOTIATOR_SERVICE_H_
#define NEGOTIATOR_SERVICE_H_

#include <string>

#include "negotiator/live.h"

namespace httplib {
class Server;
}

namespace negotiator {

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// JSON session API over a SessionManager. Routes:
//   POST /sessions                  {model?, seed?}
//   GET  /sessions/{id}
//   POST /sessions/{id}/message     {text}
//   POST /sessions/{id}/selection   {take: [3 ints] | "no_agreement"}
// Errors are 400 {error, detail}; unknown sessions and routes are 404.
class SessionService {
 public:
  explicit SessionService(SessionManager& manager,
                          std::string static_dir = "");

  ApiResponse Handle(const std::string& method, const std::string& path,
                     const std::string& body);
  // Routes every request through Handle; mounts `static_dir` at "/" when set.
  void Register(httplib::Server& server);

 private:
  SessionManager* manager_;
  std::string static_dir_;
};

}  // namespace negotiator

#endif  // NEGOTIATOR_SERVICE_H_
