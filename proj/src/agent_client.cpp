// Copyright 2026 The GEPS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "geps/agent_client.hpp"

#include "geps/fragment_codec.hpp"

namespace geps {

using nlohmann::json;

std::vector<FragmentKey> AgentError::missing() const {
  std::vector<FragmentKey> out;
  if (auto it = frame_.find("missing"); it != frame_.end() && it->is_array())
    for (const auto& p : *it) out.emplace_back(p.at(0).get<DatasetId>(), p.at(1).get<FragmentIndex>());
  return out;
}

AgentClient::AgentClient(wire::Address address, std::chrono::milliseconds timeout)
    : address_(std::move(address)), timeout_(timeout) {}

wire::Socket AgentClient::connect() const {
  auto s = wire::connect_tcp(address_, timeout_);
  wire::set_io_timeout(s, timeout_);
  return s;
}

json AgentClient::exchange(const wire::Socket& s, const json& request, const char* expected) const {
  wire::send_frame(s.fd(), request);
  json reply;
  try {
    reply = wire::recv_frame(s.fd());
  } catch (const wire::FrameError& e) {
    throw wire::NetworkError(wire::NetErrorKind::kOther, std::string("bad reply: ") + e.what());
  }
  const auto type = reply.value("type", std::string());
  if (type == "error")
    throw AgentError(reply.value("code", std::string("unknown")),
                     reply.value("message", std::string()), reply);
  if (type != expected)
    throw wire::NetworkError(wire::NetErrorKind::kOther,
                             "unexpected reply '" + type + "' from " + address_.str());
  return reply;
}

NodeInfo AgentClient::info() const {
  auto s = connect();
  return exchange(s, {{"type", "info"}, {"protocol_version", kProtocolVersion}}, "info_ok")
      .at("info")
      .get<NodeInfo>();
}

std::uint32_t AgentClient::stage(DatasetId dataset, FragmentIndex index, std::string_view bytes) const {
  auto s = connect();
  const std::uint32_t crc = crc32(bytes);
  wire::send_frame(s.fd(), {{"type", "stage"},
                            {"dataset_id", dataset},
                            {"fragment_index", index},
                            {"byte_length", bytes.size()},
                            {"crc32", crc}});
  wire::send_raw(s.fd(), bytes);
  json reply;
  try {
    reply = wire::recv_frame(s.fd());
  } catch (const wire::FrameError& e) {
    throw wire::NetworkError(wire::NetErrorKind::kOther, std::string("bad reply: ") + e.what());
  }
  if (reply.value("type", std::string()) == "error")
    throw AgentError(reply.value("code", std::string("unknown")),
                     reply.value("message", std::string()), reply);
  const auto acked = reply.at("crc32").get<std::uint32_t>();
  if (acked != crc)
    throw AgentError("crc-mismatch", "agent acknowledged a different crc32", reply);
  return acked;
}

json AgentClient::run(const RunRequest& r) const {
  json req = {{"type", "run"},
              {"job_id", r.job_id},
              {"dataset_id", r.dataset_id},
              {"fragment_indices", r.fragment_indices},
              {"filter", r.filter}};
  if (r.calibration) req["calibration"] = calibration_to_json(*r.calibration);
  auto s = connect();
  return exchange(s, req, "run_ok");
}

JobStatus AgentClient::status(JobId job) const {
  auto s = connect();
  const auto reply = exchange(s, {{"type", "status"}, {"job_id", job}}, "status_ok");
  JobStatus st;
  st.job_id = job;
  st.state = parse_local_state(reply.at("state").get<std::string>()).value_or(LocalJobState::kFailed);
  st.events_scanned = reply.value("events_scanned", std::uint64_t{0});
  st.events_passed = reply.value("events_passed", std::uint64_t{0});
  for (const auto& f : reply.value("fragments", json::array())) {
    FragmentStatus fs;
    fs.fragment_index = f.at("fragment_index").get<FragmentIndex>();
    fs.state = parse_local_state(f.at("state").get<std::string>()).value_or(LocalJobState::kFailed);
    fs.events_scanned = f.value("events_scanned", std::uint64_t{0});
    fs.events_passed = f.value("events_passed", std::uint64_t{0});
    fs.error = f.value("error", std::string());
    st.fragments.push_back(std::move(fs));
  }
  return st;
}

std::string AgentClient::fetch(const json& request) const {
  auto s = connect();
  const auto header = exchange(s, request, "fetch_ok");
  const auto length = header.at("byte_length").get<std::uint64_t>();
  if (length > wire::kMaxRawBytes)
    throw wire::NetworkError(wire::NetErrorKind::kOther, "fetch length out of range");
  auto bytes = wire::recv_raw(s.fd(), static_cast<std::size_t>(length));
  if (crc32(bytes) != header.at("crc32").get<std::uint32_t>())
    throw AgentError("crc-mismatch", "fetched bytes do not match the announced crc32", header);
  return bytes;
}

std::string AgentClient::fetch_result(JobId job, FragmentIndex index) const {
  return fetch({{"type", "fetch"}, {"job_id", job}, {"fragment_index", index}});
}

std::string AgentClient::fetch_fragment(DatasetId dataset, FragmentIndex index) const {
  return fetch({{"type", "fetch"}, {"dataset_id", dataset}, {"fragment_index", index}});
}

}  // namespace geps
