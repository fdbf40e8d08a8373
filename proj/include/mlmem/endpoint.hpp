#pragma once

// Line-delimited JSON black-box protocol.
//   request:  {"features":[x0, x1, ...]}\n
//   response: {"label":k}\n
// An error response is {"error":"..."}.

#include <cstdio>
#include <iosfwd>
#include <span>
#include <string>
#include <sys/types.h>
#include <vector>

#include "mlmem/model.hpp"

namespace mlmem::endpoint {

std::string encode_request(std::span<const double> features);
std::string encode_response(int label);

// Serve until EOF on `in`. Returns the number of answered queries.
std::size_t serve(const ModelSpec& spec, const ParameterVector& params, std::istream& in,
                  std::ostream& out);

// Spawns `argv` as a child process and talks to it over its stdin/stdout.
class SubprocessClient {
 public:
  explicit SubprocessClient(const std::vector<std::string>& argv);
  ~SubprocessClient();
  SubprocessClient(const SubprocessClient&) = delete;
  SubprocessClient& operator=(const SubprocessClient&) = delete;

  int query(std::span<const double> features);
  std::size_t queries() const { return queries_; }

 private:
  pid_t pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  std::size_t queries_ = 0;
};

// Splits a command line on whitespace (no quoting).
std::vector<std::string> split_command(const std::string& command);

}  // namespace mlmem::endpoint
