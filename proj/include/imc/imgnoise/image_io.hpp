#pragma once

#include <string>

#include "imc/imgnoise/image.hpp"

namespace imc::imgnoise {

// 8-bit grayscale I/O: loaded as value/255, stored as round(value*255).
// Format is chosen by file extension (.png, .pgm); PNG color input is
// converted to gray on load.
GrayImage read_image(const std::string& path);
void write_image(const GrayImage& img, const std::string& path);

GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);
GrayImage read_png(const std::string& path);
void write_png(const GrayImage& img, const std::string& path);

}  // namespace imc::imgnoise
