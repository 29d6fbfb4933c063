#include "imc/common/resources.hpp"

#include <fstream>
#include <sstream>

#include "imc/common/error.hpp"

namespace imc::resources {

std::string_view get(std::string_view name) {
  auto found = find(name);
  if (!found) fail(ErrorCode::invalid_input, "unknown resource '" + std::string(name) + "'");
  return *found;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace imc::resources
