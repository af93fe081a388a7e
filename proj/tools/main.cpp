// Copyright 2026 The cdp Authors
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

#include <pthread.h>
#include <signal.h>
#include <unistd.h>

#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "cdp/pipeline.hpp"
#include "cdp/sandbox.hpp"

int main(int argc, char** argv) {
  // SIGINT/SIGTERM are handled on a dedicated thread: kill the supervised
  // process groups, give the supervisors a moment to reap them, then exit.
  // The perception cache is flushed per record, so nothing else is pending.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread([signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "cdp: interrupted, reaping sandboxed processes\n";
    cdp::terminate_active_sandboxes();
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    _exit(128 + sig);
  }).detach();

  std::vector<std::string> args(argv + 1, argv + argc);
  return cdp::run_cli(args, std::cout, std::cerr);
}
