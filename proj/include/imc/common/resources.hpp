#pragma once

#include <optional>
#include <string>
#include <string_view>

// Copies of the files under config/, compiled into the library.
namespace imc::resources {

std::optional<std::string_view> find(std::string_view name);

// Like find(), but throws imc::Error when the resource is unknown.
std::string_view get(std::string_view name);

std::string read_file(const std::string& path);

}  // namespace imc::resources
