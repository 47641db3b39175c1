#include "pairtask/external_encoder.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "pairtask/error.hpp"

namespace pairtask {

using nlohmann::json;

ExternalPairEncoder::ExternalPairEncoder(ExternalEncoderConfig config) : config_(std::move(config)) {
  if (config_.command.empty()) throw ConfigError("external backend: 'command' must be a non-empty list");

  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0) throw TrainingError(std::string("pipe: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw TrainingError(std::string("pipe: ") + std::strerror(errno));
  }

  std::vector<char*> argv;
  for (auto& arg : config_.command) argv.push_back(arg.data());
  argv.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) throw TrainingError(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execvp(argv[0], argv.data());
    std::fprintf(stderr, "exec %s: %s\n", argv[0], std::strerror(errno));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // a dead worker must surface as an error, not kill us on write
  signal(SIGPIPE, SIG_IGN);

  try {
    request({{"op", "init"}, {"config", config_.init}});
  } catch (...) {
    // the destructor does not run for a half-built object
    close(to_child_);
    close(from_child_);
    kill(pid_, SIGTERM);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    throw;
  }
}

ExternalPairEncoder::~ExternalPairEncoder() {
  if (pid_ > 0) {
    try {
      request({{"op", "shutdown"}});
    } catch (const Error&) {
    }
    close(to_child_);
    close(from_child_);
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

json ExternalPairEncoder::request(const json& req) const {
  std::lock_guard lock(mutex_);
  std::string line = req.dump();
  line += '\n';
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TrainingError(std::string("external backend: write failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }

  for (;;) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      json j;
      try {
        j = json::parse(reply);
      } catch (const json::parse_error& e) {
        throw TrainingError("external backend: malformed reply: " + reply.substr(0, 200));
      }
      if (!j.value("ok", false))
        throw TrainingError("external backend (" + req.value("op", std::string("?")) +
                            "): " + j.value("error", std::string("unknown error")));
      return j;
    }
    char chunk[65536];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw TrainingError("external backend: worker exited unexpectedly");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<Logits> ExternalPairEncoder::forward_batch(
    const std::vector<std::pair<std::string, std::string>>& pairs) const {
  json jp = json::array();
  for (const auto& [q, t] : pairs) jp.push_back({q, t});
  const json reply = request({{"op", "forward"}, {"pairs", jp}});
  const auto& logits = reply.at("logits");
  if (!logits.is_array() || logits.size() != pairs.size())
    throw TrainingError("external backend: forward returned the wrong number of rows");
  std::vector<Logits> out;
  for (const auto& row : logits) {
    if (!row.is_array() || row.size() != 2) throw TrainingError("external backend: output dimensionality must be 2");
    out.push_back({row[0].get<double>(), row[1].get<double>()});
  }
  return out;
}

Logits ExternalPairEncoder::forward(std::string_view query, std::string_view text) const {
  return forward_batch({{std::string(query), std::string(text)}}).front();
}

void ExternalPairEncoder::start_training(const OptimizerConfig& c) {
  request({{"op", "start_training"},
           {"optimizer",
            {{"lr", c.lr},
             {"beta1", c.beta1},
             {"beta2", c.beta2},
             {"epsilon", c.epsilon},
             {"warmup_steps", c.warmup_steps},
             {"weight_decay", c.weight_decay},
             {"grad_clip", c.grad_clip}}}});
}

double ExternalPairEncoder::train_step(std::span<const PairwiseExample> batch, std::size_t micro_batch) {
  json jb = json::array();
  for (const auto& ex : batch) jb.push_back({{"query", ex.query}, {"text", ex.text}, {"target", ex.target}});
  const double loss =
      request({{"op", "train_step"}, {"batch", jb}, {"micro_batch", micro_batch}}).at("loss").get<double>();
  if (!std::isfinite(loss)) throw TrainingError("non-finite loss from external backend");
  return loss;
}

void ExternalPairEncoder::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  request({{"op", "save"}, {"dir", std::filesystem::absolute(dir).string()}});
}

void ExternalPairEncoder::load(const std::filesystem::path& dir) {
  request({{"op", "load"}, {"dir", std::filesystem::absolute(dir).string()}});
}

}  // namespace pairtask
