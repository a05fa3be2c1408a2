#pragma once

#include <stdexcept>
#include <string>

namespace hts {

// Root of every error raised by the library. `kind()` is a stable,
// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define HTS_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(#Name, what) {}          \
    };

HTS_DEFINE_ERROR(ParseError)
HTS_DEFINE_ERROR(FormatError)
HTS_DEFINE_ERROR(MetadataError)
HTS_DEFINE_ERROR(ConfigError)
HTS_DEFINE_ERROR(FitError)
HTS_DEFINE_ERROR(ArgumentError)
HTS_DEFINE_ERROR(DegenerateSeriesError)
HTS_DEFINE_ERROR(DegenerateInputError)
HTS_DEFINE_ERROR(FeatureError)
HTS_DEFINE_ERROR(NumericalError)
HTS_DEFINE_ERROR(CoherenceError)
HTS_DEFINE_ERROR(ScaleError)

#undef HTS_DEFINE_ERROR

// Rethrows `e` as the same error type with `prefix` prepended to its message.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& prefix);

} // namespace hts
