#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "convtrack/apprunner.hpp"

#ifdef CONVTRACK_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

namespace convtrack {

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Reads the next header token of a PNM file, skipping whitespace and comments.
class PnmReader {
 public:
  PnmReader(std::vector<unsigned char> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
      t.push_back(static_cast<char>(bytes_[pos_++]));
    if (t.empty()) fail("truncated header");
    return t;
  }

  int integer() {
    const std::string t = token();
    int v = 0;
    for (char c : t) {
      if (c < '0' || c > '9') fail("bad header value '" + t + "'");
      v = v * 10 + (c - '0');
      if (v > 1 << 24) fail("header value too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing header terminator");
    ++pos_;
  }

  unsigned sample(int bytes_per_sample) {
    if (pos_ + bytes_per_sample > bytes_.size()) fail("truncated pixel data");
    unsigned v = bytes_[pos_++];
    if (bytes_per_sample == 2) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw IoError("cannot decode image '" + name_ + "': " + why);
  }

 private:
  void skip_space() {
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

  std::vector<unsigned char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

Frame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  PnmReader r(std::move(bytes), path.string());
  const std::string magic = r.token();
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    r.fail("unsupported magic '" + magic + "'");
  const bool colour = magic == "P3" || magic == "P6";
  const bool ascii = magic == "P2" || magic == "P3";
  const int width = r.integer();
  const int height = r.integer();
  const int maxval = r.integer();
  if (width <= 0 || height <= 0) r.fail("empty image");
  if (maxval <= 0 || maxval > 65535) r.fail("maxval out of range");
  if (!ascii) r.end_header();
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  // Division rather than a reciprocal keeps k/255 bit-identical to written frames.
  const double full = maxval;

  auto next = [&]() -> double {
    const unsigned v = ascii ? static_cast<unsigned>(r.integer()) : r.sample(bytes_per_sample);
    if (v > static_cast<unsigned>(maxval)) r.fail("sample exceeds maxval");
    return v / full;
  };

  Frame frame(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (colour) {
        const double red = next();
        const double green = next();
        const double blue = next();
        frame(y, x) = luminance(red, green, blue);
      } else {
        frame(y, x) = next();
      }
    }
  }
  return frame;
}

#ifdef CONVTRACK_HAVE_OPENCV
Frame read_with_opencv(const fs::path& path) {
  const cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw IoError("cannot decode image '" + path.string() + "'");
  const int depth = img.depth();
  if (depth != CV_8U && depth != CV_16U)
    throw IoError("cannot decode image '" + path.string() + "': unsupported bit depth");
  const double full = depth == CV_8U ? 255.0 : 65535.0;
  const int channels = img.channels();
  Frame frame(img.rows, img.cols);
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      auto at = [&](int c) {
        return depth == CV_8U ? img.ptr<unsigned char>(y)[x * channels + c] / full
                              : img.ptr<unsigned short>(y)[x * channels + c] / full;
      };
      // OpenCV stores colour as BGR(A).
      frame(y, x) = channels >= 3 ? luminance(at(2), at(1), at(0)) : at(0);
    }
  }
  return frame;
}
#endif

}  // namespace

bool is_image_file(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return true;
#ifdef CONVTRACK_HAVE_OPENCV
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" || ext == ".tif" ||
         ext == ".tiff";
#else
  return false;
#endif
}

Frame read_image(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
#ifdef CONVTRACK_HAVE_OPENCV
  if (is_image_file(path)) return read_with_opencv(path);
#endif
  throw IoError("cannot decode image '" + path.string() + "': unsupported format '" + ext + "'");
}

void write_pgm(const fs::path& path, const Frame& frame) {
  require(!frame.empty(), "write_pgm: empty frame");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
  out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(frame.width()));
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x)
      row[x] = static_cast<unsigned char>(std::lround(std::clamp(frame(y, x), 0.0, 1.0) * 255.0));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
}

}  // namespace convtrack
