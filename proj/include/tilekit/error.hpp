#pragma once

#include <stdexcept>
#include <string>

namespace tilekit {

// Error vocabulary shared by all modules. Mathematically undefined score
// values are NOT errors; they are encoded as quiet NaN (see performance.hpp).
enum class errc {
    all_zero,
    negative_input,
    singular_system,
    infeasible_solution,
    undefined_corner,
    empty_entity_set,
    grid_mismatch,
    unknown_entity,
    rank_out_of_range,
    degenerate_input,
    too_few_entities,
    too_few_samples,
    parse_error,
    duplicate_entity,
    infeasible_repair,
    no_matching_entities,
    io_error,
    invalid_argument,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::all_zero: return "AllZero";
        case errc::negative_input: return "NegativeInput";
        case errc::singular_system: return "SingularSystem";
        case errc::infeasible_solution: return "InfeasibleSolution";
        case errc::undefined_corner: return "UndefinedCorner";
        case errc::empty_entity_set: return "EmptyEntitySet";
        case errc::grid_mismatch: return "GridMismatch";
        case errc::unknown_entity: return "UnknownEntity";
        case errc::rank_out_of_range: return "RankOutOfRange";
        case errc::degenerate_input: return "DegenerateInput";
        case errc::too_few_entities: return "TooFewEntities";
        case errc::too_few_samples: return "TooFewSamples";
        case errc::parse_error: return "ParseError";
        case errc::duplicate_entity: return "DuplicateEntity";
        case errc::infeasible_repair: return "InfeasibleRepair";
        case errc::no_matching_entities: return "NoMatchingEntities";
        case errc::io_error: return "IoError";
        case errc::invalid_argument: return "InvalidArgument";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace tilekit
