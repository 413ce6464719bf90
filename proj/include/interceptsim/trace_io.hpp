#pragma once

#include <string>
#include <vector>

#include "interceptsim/workload.hpp"

namespace icept {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON Lines trace format. First line is the header
//   {"format":"intercept-trace","version":1}
// followed by one request object per line:
//   {"id":1,"arrival":0.42,"prompt_tokens":512,
//    "segments":[{"decode":55,"int":{"kind":"QA","duration":0.69,"ret":54}},{"decode":80}]}
void save_trace(const std::vector<Request>& trace, const std::string& path);

// Parse errors carry the offending line number; the loaded trace is validated
// (unique ids, segment invariants) and returned sorted by arrival.
std::vector<Request> load_trace(const std::string& path);

}  // namespace icept
