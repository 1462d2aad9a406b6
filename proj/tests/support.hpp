#pragma once

#include <sys/types.h>
#include <sys/wait.h>
#include <signal.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "direlieff/cluster.hpp"
#include "direlieff/core.hpp"
#include "direlieff/engine.hpp"
#include "direlieff/ingestion.hpp"

namespace testing {

using direlieff::core::FeatureKind;
using direlieff::core::FeatureMeta;
using direlieff::core::Instance;
using direlieff::core::Schema;

struct RandomShape {
  std::size_t n = 50;
  std::size_t a = 4;
  std::size_t classes = 2;
  double nominal_share = 0.3;
  std::size_t categories = 3;
  /// Numeric values are drawn from this many levels to force ties.
  std::size_t levels = 0;
};

inline direlieff::io::Dataset random_dataset(const RandomShape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FeatureMeta> features;
  for (std::size_t a = 0; a < shape.a; ++a) {
    FeatureMeta f;
    f.name = "f" + std::to_string(a);
    f.index = a;
    f.kind = unit(rng) < shape.nominal_share ? FeatureKind::nominal : FeatureKind::numeric;
    if (f.kind == FeatureKind::nominal) {
      for (std::size_t v = 0; v < shape.categories; ++v) {
        f.categories.push_back("v" + std::to_string(v));
      }
    }
    features.push_back(std::move(f));
  }
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < shape.classes; ++c) labels.push_back("c" + std::to_string(c));
  direlieff::io::Dataset ds;
  ds.schema = Schema(features, labels);
  for (std::size_t i = 0; i < shape.n; ++i) {
    Instance inst;
    inst.id = i;
    inst.label = static_cast<std::uint32_t>(rng() % shape.classes);
    for (const auto& f : features) {
      if (f.kind == FeatureKind::nominal) {
        inst.values.push_back(static_cast<double>(rng() % shape.categories));
      } else if (shape.levels > 0) {
        inst.values.push_back(static_cast<double>(rng() % shape.levels) - 2.0);
      } else {
        inst.values.push_back(unit(rng) * 20.0 - 5.0);
      }
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "direlieff-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// A `direlieff worker` child process listening on an ephemeral port.
class WorkerProcess {
 public:
  WorkerProcess(const std::string& binary, const std::string& name) {
    int fds[2];
    if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw std::runtime_error("fork failed");
    if (pid_ == 0) {
      dup2(fds[1], STDOUT_FILENO);
      close(fds[0]);
      close(fds[1]);
      execl(binary.c_str(), binary.c_str(), "worker", "--listen", "127.0.0.1:0", "--name",
            name.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(fds[1]);
    FILE* out = fdopen(fds[0], "r");
    char line[256] = {0};
    const bool got = std::fgets(line, sizeof line, out) != nullptr;
    std::fclose(out);
    std::string text = got ? line : "";
    const std::string prefix = "listening ";
    if (text.rfind(prefix, 0) != 0) {
      kill();
      throw std::runtime_error("worker did not announce its port: '" + text + "'");
    }
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    endpoint_ = direlieff::cluster::Endpoint::parse(text.substr(prefix.size()));
  }
  ~WorkerProcess() {
    if (pid_ > 0 && status_ < 0) {
      ::kill(pid_, SIGKILL);
      wait();
    }
  }
  WorkerProcess(const WorkerProcess&) = delete;
  WorkerProcess& operator=(const WorkerProcess&) = delete;

  const direlieff::cluster::Endpoint& endpoint() const { return endpoint_; }
  pid_t pid() const { return pid_; }

  void kill() {
    if (pid_ > 0 && status_ < 0) ::kill(pid_, SIGKILL);
  }

  /// Exit code, or 128 + signal.
  int wait() {
    if (status_ >= 0 || pid_ <= 0) return status_;
    int raw = 0;
    waitpid(pid_, &raw, 0);
    status_ = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + WTERMSIG(raw);
    return status_;
  }

 private:
  pid_t pid_ = -1;
  int status_ = -1;
  direlieff::cluster::Endpoint endpoint_;
};

}  // namespace testing
