#include "afpnkit/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace afpnkit {

namespace {

// Next whitespace-delimited token, skipping '#' comment lines per the
// netpbm grammar.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (next_token(in) != "P6") {
    throw std::runtime_error(path + " is not a binary PPM (P6)");
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path + " has a malformed PPM header");
  }
  if (w < 1 || h < 1) throw std::runtime_error(path + " has invalid size");
  if (maxval != 255) {
    throw std::runtime_error(path + " must use maxval 255");
  }
  // The header's final whitespace byte was already consumed by the maxval
  // token scan; raster follows immediately.
  std::vector<unsigned char> raster(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raster.data()),
          static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size())) {
    throw std::runtime_error(path + " is truncated");
  }
  Tensor img(1, 3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        img.at(0, ch, y, x) =
            raster[(static_cast<std::size_t>(y) * w + x) * 3 + ch] / 255.0f;
      }
  return img;
}

void write_ppm(const std::string& path, const Tensor& img) {
  if (img.n() != 1 || img.c() != 3) {
    throw std::invalid_argument("write_ppm expects a 1x3xHxW tensor");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << img.w() << " " << img.h() << "\n255\n";
  std::vector<unsigned char> raster(static_cast<std::size_t>(img.w()) *
                                    img.h() * 3);
  for (int y = 0; y < img.h(); ++y)
    for (int x = 0; x < img.w(); ++x)
      for (int ch = 0; ch < 3; ++ch) {
        const float v = std::clamp(img.at(0, ch, y, x), 0.0f, 1.0f);
        raster[(static_cast<std::size_t>(y) * img.w() + x) * 3 + ch] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace afpnkit
