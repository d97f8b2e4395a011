#include "smdcard/image.hpp"

#include <cctype>
#include <fstream>
#include <iterator>

#include "smdcard/error.hpp"
#include "smdcard/ingest.hpp"

namespace smdcard {

namespace {

class PgmCursor {
 public:
  PgmCursor(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail("expected an integer");
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 1'000'000'000UL) fail("integer out of range");
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kParse, path_.string() + ": malformed PGM (" + what + ")");
  }

 private:
  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInput, "cannot open image " + path.string());
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw Error(ErrorCode::kParse, path.string() + ": not a P2/P5 graymap");
  }
  const bool binary = bytes[1] == '5';
  PgmCursor cur(bytes, path);
  cur.advance(2);
  GrayImage img;
  img.width = cur.number();
  img.height = cur.number();
  const auto maxval = cur.number();
  if (img.width == 0 || img.height == 0) cur.fail("zero dimension");
  if (maxval == 0 || maxval > 65535) cur.fail("maxval out of range");
  img.peak = maxval <= 255 ? 255.0 : 65535.0;
  const std::size_t count = img.width * img.height;
  img.pixels.resize(count);

  if (binary) {
    // exactly one whitespace byte separates the header from the raster
    if (cur.pos() >= bytes.size() || !std::isspace(bytes[cur.pos()])) cur.fail("missing header separator");
    cur.advance(1);
    const std::size_t bps = maxval <= 255 ? 1 : 2;
    if (bytes.size() - cur.pos() < count * bps) cur.fail("truncated raster");
    const unsigned char* p = bytes.data() + cur.pos();
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = bps == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
      if (v > maxval) cur.fail("sample exceeds maxval");
      img.pixels[i] = static_cast<double>(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = cur.number();
      if (v > maxval) cur.fail("sample exceeds maxval");
      img.pixels[i] = static_cast<double>(v);
    }
  }
  return img;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kMissingInput, "cannot write image " + path.string());
  const unsigned maxval = image.peak > 255.0 ? 65535U : 255U;
  out << "P5\n" << image.width << ' ' << image.height << '\n' << maxval << '\n';
  for (double px : image.pixels) {
    const auto v = static_cast<unsigned>(px);
    if (maxval > 255) out.put(static_cast<char>((v >> 8) & 0xff));
    out.put(static_cast<char>(v & 0xff));
  }
}

std::vector<ImagePair> read_image_manifest(const std::filesystem::path& path) {
  const auto rows = read_delimited(path);
  if (rows.empty()) throw Error(ErrorCode::kParse, path.string() + ": empty image manifest");
  const auto base = path.parent_path();
  std::vector<ImagePair> pairs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 2) {
      throw Error(ErrorCode::kParse, path.string() + ": row " + std::to_string(r + 1) +
                                         " must have exactly 2 columns");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    pairs.push_back({resolve(rows[r][0]), resolve(rows[r][1])});
  }
  return pairs;
}

}  // namespace smdcard
