#include "hts/errors.hpp"

namespace hts {

void rethrow_with_context(const Error& e, const std::string& prefix) {
    const std::string what = prefix + e.what();
    const std::string& k = e.kind();
#define HTS_RETHROW(Name)   \
    if (k == #Name) {       \
        throw Name(what);   \
    }
    HTS_RETHROW(ParseError)
    HTS_RETHROW(FormatError)
    HTS_RETHROW(MetadataError)
    HTS_RETHROW(ConfigError)
    HTS_RETHROW(FitError)
    HTS_RETHROW(ArgumentError)
    HTS_RETHROW(DegenerateSeriesError)
    HTS_RETHROW(DegenerateInputError)
    HTS_RETHROW(FeatureError)
    HTS_RETHROW(NumericalError)
    HTS_RETHROW(CoherenceError)
    HTS_RETHROW(ScaleError)
#undef HTS_RETHROW
    throw Error(k, what);
}

} // namespace hts
