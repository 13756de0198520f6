#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace lens::testutil {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& prefix) {
    std::random_device rd;
    for (int attempt = 0; attempt < 32; ++attempt) {
      auto candidate = std::filesystem::temp_directory_path() /
                       (prefix + "-" + std::to_string(rd()));
      if (std::filesystem::create_directories(candidate)) {
        path = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace lens::testutil
