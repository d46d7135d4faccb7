#include "fabric/fsutil.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fabric/crypto.hpp"
#include "fabric/error.hpp"

namespace fabric {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::storage_io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw Error(ErrorCode::storage_io, "read failed " + path.string());
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  ensure_dir(path.parent_path());
  const fs::path tmp = path.parent_path() / (path.filename().string() + ".tmp-" + random_hex(6));
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
  if (fd < 0) throw Error(ErrorCode::storage_io, "cannot create " + tmp.string());
  std::size_t off = 0;
  while (off < content.size()) {
    const ssize_t n = ::write(fd, content.data() + off, content.size() - off);
    if (n < 0) {
      ::close(fd);
      ::unlink(tmp.c_str());
      throw Error(ErrorCode::storage_io, "write failed " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::storage_io, "fsync failed " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::storage_io, "rename failed " + path.string() + ": " + ec.message());
  }
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::storage_io, "mkdir failed " + dir.string() + ": " + ec.message());
}

bool is_temp_artifact(const fs::path& path) {
  return path.filename().string().find(".tmp-") != std::string::npos;
}

std::vector<fs::path> list_files_recursive(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (!item.is_regular_file()) continue;
    if (is_temp_artifact(item.path())) continue;
    out.push_back(fs::relative(item.path(), root));
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });
  return out;
}

}  // namespace fabric
