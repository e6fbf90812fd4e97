#pragma once

// RGBA raster with the handful of drawing primitives the annotator and the
// synthetic fixture screenshots need, plus PNG encode/decode.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace funcnav {

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 255;

  bool operator==(const Rgba&) const = default;
};

class Raster {
 public:
  Raster(int width, int height, Rgba fill = {255, 255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgba pixel(int x, int y) const;

  // All drawing clips to the raster bounds.
  void fill_rect(int x, int y, int w, int h, Rgba color);
  void outline_rect(int x, int y, int w, int h, int thickness, Rgba color);
  /// 5x7 bitmap glyphs scaled by an integer factor; lowercase renders as uppercase.
  void draw_text(int x, int y, std::string_view text, int scale, Rgba color);
  static int text_width(std::string_view text, int scale);
  static int text_height(int scale) { return 7 * scale; }

  std::vector<std::uint8_t> encode_png() const;
  /// kImageDecodeFailed on anything libpng rejects.
  static Raster decode_png(std::span<const std::uint8_t> png);

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;  // RGBA rows
};

/// Width and height from the IHDR chunk, without decoding pixel data.
std::optional<std::pair<int, int>> png_dimensions(std::span<const std::uint8_t> png);

}  // namespace funcnav
