#pragma once

// Destinations for generated artifact trees: a directory on disk, or an
// in-memory digest used to compare builds without writing gigabytes.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace tmon {

class ArtifactSink {
 public:
  virtual ~ArtifactSink() = default;
  // `relative_path` uses '/' separators and is relative to the tree root.
  virtual void write(const std::string& relative_path, std::string_view bytes) = 0;
};

class DirectorySink final : public ArtifactSink {
 public:
  explicit DirectorySink(std::filesystem::path root) : root_(std::move(root)) {}
  void write(const std::string& relative_path, std::string_view bytes) override;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

class DigestSink final : public ArtifactSink {
 public:
  void write(const std::string& relative_path, std::string_view bytes) override;

  // path -> sha256 of contents.
  const std::map<std::string, std::string>& files() const { return files_; }
  // Digest over the sorted (path, file digest) list.
  std::string tree_digest() const;

 private:
  std::map<std::string, std::string> files_;
};

// Same tree digest computed from files on disk under `root`.
std::string directory_digest(const std::filesystem::path& root);

// Writes `bytes` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tmon
