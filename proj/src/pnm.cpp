#include "skinseg/pnm.hpp"

#include <fstream>

#include "skinseg/common.hpp"

namespace skinseg {

namespace {

// Skips whitespace and '#' comment lines, then reads one decimal token.
int read_header_int(std::istream& in, const std::string& what) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) {
    throw DataError("pnm: malformed header while reading " + what);
  }
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    if (value > 1 << 28) throw DataError("pnm: absurd header value for " + what);
    c = in.get();
  }
  return value;
}

}  // namespace

PnmImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("pnm: cannot open " + path.string());

  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels = 0;
  if (magic[0] == 'P' && magic[1] == '6') {
    channels = 3;
  } else if (magic[0] == 'P' && magic[1] == '5') {
    channels = 1;
  } else {
    throw DataError("pnm: unsupported format in " + path.string() +
                    " (only binary P6/P5 are supported)");
  }

  PnmImage img;
  img.channels = channels;
  img.width = read_header_int(in, "width");
  img.height = read_header_int(in, "height");
  const int maxval = read_header_int(in, "maxval");
  if (img.width <= 0 || img.height <= 0) {
    throw DataError("pnm: non-positive dimensions in " + path.string());
  }
  if (maxval <= 0 || maxval > 255) {
    throw DataError("pnm: unsupported maxval " + std::to_string(maxval) + " in " +
                    path.string());
  }
  // The single whitespace byte separating header from payload was consumed by
  // read_header_int's lookahead already ending on it.

  const std::size_t count = static_cast<std::size_t>(img.width) * img.height * channels;
  img.data.resize(count);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw DataError("pnm: truncated payload in " + path.string());
  }
  if (maxval != 255) {
    for (auto& v : img.data) {
      v = static_cast<std::uint8_t>((static_cast<int>(v) * 255 + maxval / 2) / maxval);
    }
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, const PnmImage& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw DataError("pnm: only 1- or 3-channel rasters can be written");
  }
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (img.data.size() != count) throw DataError("pnm: raster size mismatch");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("pnm: cannot open " + path.string() + " for writing");
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(count));
  if (!out) throw DataError("pnm: write failure for " + path.string());
}

}  // namespace skinseg
