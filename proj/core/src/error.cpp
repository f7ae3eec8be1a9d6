#include "eenas/error.hpp"

namespace eenas {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::Overflow: return "overflow";
        case ErrorCode::Config: return "config error";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::Evaluation: return "evaluation error";
        case ErrorCode::Divergence: return "divergence";
        case ErrorCode::Constraint: return "constraint violation";
        case ErrorCode::Io: return "i/o error";
    }
    return "unknown";
}

void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace eenas
