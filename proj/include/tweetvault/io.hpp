#pragma once

// File plumbing: gzip (single and multi-member), line readers, durable
// write-then-rename.

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

namespace tweetvault {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One complete gzip member.
inline std::string gzip_compress(std::string_view data, int level = Z_DEFAULT_COMPRESSION) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw IoError("deflateInit2 failed");
  std::string out;
  out.resize(deflateBound(&zs, static_cast<uLong>(data.size())) + 32);
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("deflate failed");
  out.resize(zs.total_out);
  return out;
}

// Decompresses a sequence of concatenated gzip members.
inline std::string gzip_decompress(std::string_view data) {
  std::string out;
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw IoError("inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  char buf[1 << 16];
  while (true) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    int rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_STREAM_END) {
      if (zs.avail_in == 0) break;
      inflateReset(&zs);
      continue;
    }
    if (rc != Z_OK) {
      inflateEnd(&zs);
      throw IoError("corrupt gzip data");
    }
    if (zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw IoError("truncated gzip data");
    }
  }
  inflateEnd(&zs);
  return out;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

inline void fsync_path(const fs::path& path) {
  int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Writes `data` to a sibling temp file, fsyncs it and renames it over `path`.
inline void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoError("cannot create " + tmp.string());
    bool ok = std::fwrite(data.data(), 1, data.size(), f) == data.size();
    ok = std::fflush(f) == 0 && ok;
    ok = ::fsync(::fileno(f)) == 0 && ok;
    std::fclose(f);
    if (!ok) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
  if (path.has_parent_path()) fsync_path(path.parent_path());
}

// Calls `fn` for each '\n'-terminated line (a final unterminated line counts).
inline void for_each_line(std::string_view text, const std::function<void(std::string_view)>& fn) {
  while (!text.empty()) {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
      fn(text);
      return;
    }
    fn(text.substr(0, nl));
    text.remove_prefix(nl + 1);
  }
}

// Streams lines out of a (possibly multi-member) gzip file without loading
// it whole.
class GzipLineReader {
 public:
  explicit GzipLineReader(const fs::path& path) : path_(path) {
    file_ = gzopen(path.c_str(), "rb");
    if (!file_) throw IoError("cannot open " + path.string());
    gzbuffer(file_, 1 << 17);
  }
  ~GzipLineReader() {
    if (file_) gzclose(file_);
  }
  GzipLineReader(const GzipLineReader&) = delete;
  GzipLineReader& operator=(const GzipLineReader&) = delete;

  bool next(std::string& line) {
    line.clear();
    while (true) {
      if (pos_ < buf_.size()) {
        auto nl = buf_.find('\n', pos_);
        if (nl != std::string::npos) {
          line.append(buf_, pos_, nl - pos_);
          pos_ = nl + 1;
          return true;
        }
        line.append(buf_, pos_, std::string::npos);
        pos_ = buf_.size();
      }
      if (eof_) return !line.empty();
      fill();
    }
  }

 private:
  void fill() {
    buf_.resize(1 << 17);
    int n = gzread(file_, buf_.data(), static_cast<unsigned>(buf_.size()));
    if (n < 0) {
      int err = 0;
      const char* msg = gzerror(file_, &err);
      throw IoError("corrupt gzip file " + path_.string() + ": " + (msg ? msg : "?"));
    }
    buf_.resize(static_cast<std::size_t>(n));
    pos_ = 0;
    if (n == 0) {
      eof_ = true;
      int err = 0;
      gzerror(file_, &err);
      if (err != Z_OK && err != Z_BUF_ERROR) throw IoError("corrupt gzip file " + path_.string());
      // gzread reports a truncated stream as Z_BUF_ERROR at EOF.
      if (err == Z_BUF_ERROR) throw IoError("truncated gzip file " + path_.string());
    }
  }

  fs::path path_;
  gzFile file_ = nullptr;
  std::string buf_;
  std::size_t pos_ = 0;
  bool eof_ = false;
};

// Streaming gzip writer; output appears at `path` only on commit().
class GzipFileWriter {
 public:
  explicit GzipFileWriter(fs::path path) : path_(std::move(path)), tmp_(path_) {
    tmp_ += ".tmp";
    file_ = gzopen(tmp_.c_str(), "wb6");
    if (!file_) throw IoError("cannot create " + tmp_.string());
    gzbuffer(file_, 1 << 17);
  }
  ~GzipFileWriter() {
    if (file_) {
      gzclose(file_);
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }
  GzipFileWriter(const GzipFileWriter&) = delete;
  GzipFileWriter& operator=(const GzipFileWriter&) = delete;

  void write_line(std::string_view line) {
    if (!line.empty() && gzwrite(file_, line.data(), static_cast<unsigned>(line.size())) == 0)
      throw IoError("write failed: " + tmp_.string());
    if (gzputc(file_, '\n') < 0) throw IoError("write failed: " + tmp_.string());
    bytes_ += line.size() + 1;
  }

  // Uncompressed bytes written so far.
  std::size_t bytes() const { return bytes_; }

  void commit() {
    int rc = gzclose(file_);
    file_ = nullptr;
    if (rc != Z_OK) throw IoError("write failed: " + tmp_.string());
    fsync_path(tmp_);
    std::error_code ec;
    fs::rename(tmp_, path_, ec);
    if (ec) throw IoError("rename failed: " + path_.string() + ": " + ec.message());
    if (path_.has_parent_path()) fsync_path(path_.parent_path());
  }

 private:
  fs::path path_;
  fs::path tmp_;
  gzFile file_ = nullptr;
  std::size_t bytes_ = 0;
};

// Sorted list of regular files in `dir` whose names end with `suffix`.
inline std::vector<fs::path> list_files(const fs::path& dir, std::string_view suffix) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto name = e.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tweetvault
