#include "tmon/artifacts.hpp"

#include <fstream>

#include "json_util.hpp"
#include "tmon/codec.hpp"
#include "tmon/error.hpp"

namespace tmon {

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void DirectorySink::write(const std::string& relative_path, std::string_view bytes) {
  write_file_atomic(root_ / relative_path, bytes);
}

void DigestSink::write(const std::string& relative_path, std::string_view bytes) {
  files_[relative_path] = sha256_hex(bytes);
}

namespace {

std::string digest_of(const std::map<std::string, std::string>& files) {
  std::string listing;
  for (const auto& [path, digest] : files) listing += path + "\t" + digest + "\n";
  return sha256_hex(listing);
}

}  // namespace

std::string DigestSink::tree_digest() const { return digest_of(files_); }

std::string directory_digest(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[std::filesystem::relative(entry.path(), root).generic_string()] =
        sha256_hex(detail::read_text_file(entry.path()));
  }
  return digest_of(files);
}

}  // namespace tmon
