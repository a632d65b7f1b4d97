#pragma once

#include <stdexcept>
#include <string>

namespace slm {

// Every failure raised by the library carries a short machine-readable kind
// ("dimension", "index", ...) so the CLI can print `error[kind]: message`.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

struct IndexError : Error {
  explicit IndexError(const std::string& m) : Error("index", m) {}
};

struct LengthError : Error {
  explicit LengthError(const std::string& m) : Error("length", m) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};

}  // namespace slm
