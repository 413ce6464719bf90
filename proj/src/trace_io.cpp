#include "interceptsim/trace_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace icept {

using nlohmann::json;

namespace {

json segment_to_json(const Segment& s) {
  json j;
  j["decode"] = s.decode_tokens;
  if (s.interception) {
    j["int"] = {{"kind", s.interception->kind},
                {"duration", s.interception->duration},
                {"ret", s.interception->return_tokens}};
  }
  return j;
}

Segment segment_from_json(const json& j) {
  Segment s;
  s.decode_tokens = j.at("decode").get<int>();
  if (j.contains("int")) {
    const json& ji = j.at("int");
    Interception in;
    in.kind = ji.at("kind").get<std::string>();
    in.duration = ji.at("duration").get<double>();
    in.return_tokens = ji.at("ret").get<int>();
    s.interception = std::move(in);
  }
  return s;
}

}  // namespace

void save_trace(const std::vector<Request>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << json{{"format", "intercept-trace"}, {"version", 1}}.dump() << '\n';
  for (const auto& r : trace) {
    json j;
    j["id"] = r.id;
    j["arrival"] = r.arrival;
    j["prompt_tokens"] = r.prompt_tokens;
    json segs = json::array();
    for (const auto& s : r.segments) segs.push_back(segment_to_json(s));
    j["segments"] = std::move(segs);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write to " + path + " failed");
}

std::vector<Request> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<Request> trace;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!header_seen) {
      if (!j.contains("format") || j.at("format") != "intercept-trace")
        throw ParseError(path + ":" + std::to_string(lineno) + ": missing intercept-trace header");
      if (j.at("version").get<int>() != 1)
        throw ParseError(path + ":" + std::to_string(lineno) + ": unsupported trace version");
      header_seen = true;
      continue;
    }
    try {
      Request r;
      r.id = j.at("id").get<std::int64_t>();
      r.arrival = j.at("arrival").get<double>();
      r.prompt_tokens = j.at("prompt_tokens").get<int>();
      for (const auto& js : j.at("segments")) r.segments.push_back(segment_from_json(js));
      trace.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen) throw ParseError(path + ": empty file or missing header");

  std::stable_sort(trace.begin(), trace.end(),
                   [](const Request& a, const Request& b) { return a.arrival < b.arrival; });
  validate_trace(trace);
  return trace;
}

}  // namespace icept
