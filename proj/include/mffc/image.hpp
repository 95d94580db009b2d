#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mffc/errors.hpp"
#include "mffc/types.hpp"

namespace mffc {

namespace detail {

/// Next whitespace/comment-delimited header token of a PNM stream.
inline std::string pnm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  if (tok.empty()) throw IoError("image: truncated header in " + path);
  return tok;
}

inline int pnm_int(std::istream& in, const std::string& path) {
  const std::string tok = pnm_token(in, path);
  try {
    return std::stoi(tok);
  } catch (...) {
    throw IoError("image: bad header number '" + tok + "' in " + path);
  }
}

}  // namespace detail

/// Load a PGM (P2/P5) or PPM (P3/P6) image as a grayscale matrix in [0,255].
/// Color converts by the standard luma weights 0.299/0.587/0.114. Only 8-bit
/// files (maxval <= 255) are accepted.
inline Matrix load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("image: cannot open " + path);

  const std::string magic = detail::pnm_token(in, path);
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw IoError("image: unsupported format '" + magic + "' in " + path);

  const int w = detail::pnm_int(in, path);
  const int h = detail::pnm_int(in, path);
  const int maxval = detail::pnm_int(in, path);
  if (w < 1 || h < 1) throw IoError("image: bad dimensions in " + path);
  if (maxval < 1 || maxval > 255) throw IoError("image: only 8-bit images supported: " + path);

  const std::size_t samples = static_cast<std::size_t>(w) * h * (color ? 3 : 1);
  std::vector<double> raw(samples);
  if (ascii) {
    for (std::size_t i = 0; i < samples; ++i) raw[i] = detail::pnm_int(in, path);
  } else {
    // Binary payload starts after exactly one whitespace byte (already
    // consumed by the maxval token read).
    std::vector<unsigned char> bytes(samples);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(samples));
    if (static_cast<std::size_t>(in.gcount()) != samples)
      throw IoError("image: truncated pixel data in " + path);
    for (std::size_t i = 0; i < samples; ++i) raw[i] = bytes[i];
  }

  Matrix img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (color) {
        const std::size_t base = 3 * (static_cast<std::size_t>(r) * w + c);
        img(r, c) = 0.299 * raw[base] + 0.587 * raw[base + 1] + 0.114 * raw[base + 2];
      } else {
        img(r, c) = raw[static_cast<std::size_t>(r) * w + c];
      }
    }
  }
  return img;
}

/// Load and require an exact size; no silent resizing.
inline Matrix load_image(const std::string& path, int expected_h, int expected_w) {
  Matrix img = load_image(path);
  if (img.rows() != expected_h || img.cols() != expected_w)
    throw InputError("image: " + path + " is " + std::to_string(img.rows()) + "x" +
                     std::to_string(img.cols()) + ", expected " + std::to_string(expected_h) +
                     "x" + std::to_string(expected_w));
  return img;
}

/// Write binary 8-bit PGM (P5); values clamped to [0,255] and rounded.
inline void save_pgm(const std::string& path, const Matrix& img) {
  if (img.size() == 0) throw InputError("image: refusing to write an empty image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("image: cannot write " + path);
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(img.size()));
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      bytes[i++] = static_cast<unsigned char>(
          std::lround(std::min(255.0, std::max(0.0, img(r, c)))));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("image: short write to " + path);
}

/// Horizontal mirror (column reversal); involutive.
inline Matrix hflip(const Matrix& img) { return img.rowwise().reverse(); }

}  // namespace mffc
