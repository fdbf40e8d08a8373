#include "mlmem/endpoint.hpp"

#include <csignal>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "mlmem/error.hpp"

namespace mlmem::endpoint {

std::string encode_request(std::span<const double> features) {
  nlohmann::json j;
  j["features"] = std::vector<double>(features.begin(), features.end());
  return j.dump();
}

std::string encode_response(int label) { return nlohmann::json{{"label", label}}.dump(); }

std::size_t serve(const ModelSpec& spec, const ParameterVector& params, std::istream& in,
                  std::ostream& out) {
  const Layout layout = layout_of(spec);
  Workspace ws;
  std::size_t answered = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto x = j.at("features").get<std::vector<double>>();
      if (x.size() != spec.input_dim) {
        throw ContractError("expected " + std::to_string(spec.input_dim) + " features, got " +
                            std::to_string(x.size()));
      }
      out << encode_response(predict_label(spec, layout, params.span(), x, ws)) << '\n';
      ++answered;
    } catch (const std::exception& e) {
      out << nlohmann::json{{"error", e.what()}}.dump() << '\n';
    }
    out.flush();
  }
  return answered;
}

SubprocessClient::SubprocessClient(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ContractError("empty endpoint command");
  std::signal(SIGPIPE, SIG_IGN);
  int down[2];
  int up[2];
  if (pipe(down) != 0 || pipe(up) != 0) throw Error("cannot create pipes for the endpoint");
  pid_ = fork();
  if (pid_ < 0) throw Error("cannot fork the endpoint process");
  if (pid_ == 0) {
    dup2(down[0], STDIN_FILENO);
    dup2(up[1], STDOUT_FILENO);
    close(down[0]);
    close(down[1]);
    close(up[0]);
    close(up[1]);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(down[0]);
  close(up[1]);
  to_child_ = fdopen(down[1], "w");
  from_child_ = fdopen(up[0], "r");
  if (!to_child_ || !from_child_) throw Error("cannot open endpoint pipes");
}

SubprocessClient::~SubprocessClient() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

int SubprocessClient::query(std::span<const double> features) {
  const std::string req = encode_request(features) + "\n";
  if (std::fwrite(req.data(), 1, req.size(), to_child_) != req.size() ||
      std::fflush(to_child_) != 0) {
    throw Error("endpoint closed its input");
  }
  char* buf = nullptr;
  std::size_t cap = 0;
  const ssize_t n = getline(&buf, &cap, from_child_);
  std::string line = n > 0 ? std::string(buf, static_cast<std::size_t>(n)) : std::string();
  std::free(buf);
  if (n <= 0) throw Error("endpoint closed its output");
  const auto j = nlohmann::json::parse(line);
  if (j.contains("error")) throw Error("endpoint error: " + j["error"].get<std::string>());
  ++queries_;
  return j.at("label").get<int>();
}

std::vector<std::string> split_command(const std::string& command) {
  std::istringstream is(command);
  std::vector<std::string> out;
  std::string part;
  while (is >> part) out.push_back(part);
  return out;
}

}  // namespace mlmem::endpoint
