#pragma once

#include <stdexcept>
#include <string>

namespace cosmix {

// Status categories shared by the C API and the CLI exit codes.
enum class errc : int {
  ok = 0,
  usage = 1,
  data = 2,
  numeric = 3,
};

class error : public std::runtime_error {
 public:
  error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

struct usage_error : error {
  explicit usage_error(std::string msg) : error(errc::usage, std::move(msg)) {}
};

struct data_error : error {
  explicit data_error(std::string msg) : error(errc::data, std::move(msg)) {}
};

struct numeric_error : error {
  explicit numeric_error(std::string msg) : error(errc::numeric, std::move(msg)) {}
};

// Finer-grained data failures. Kept as distinct types so callers and tests
// can tell what went wrong without string matching.
struct alignment_error : data_error {
  explicit alignment_error(std::string msg) : data_error(std::move(msg)) {}
};

struct format_error : data_error {
  explicit format_error(std::string msg) : data_error(std::move(msg)) {}
};

struct remap_error : data_error {
  explicit remap_error(std::string msg) : data_error(std::move(msg)) {}
};

struct statistics_error : data_error {
  explicit statistics_error(std::string msg) : data_error(std::move(msg)) {}
};

struct selection_error : data_error {
  explicit selection_error(std::string msg) : data_error(std::move(msg)) {}
};

struct model_output_error : data_error {
  explicit model_output_error(std::string msg) : data_error(std::move(msg)) {}
};

struct loss_error : data_error {
  explicit loss_error(std::string msg) : data_error(std::move(msg)) {}
};

}  // namespace cosmix
