#include "dpscale/error.hpp"

namespace dpscale {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::DegeneratePatch: return "degenerate_patch";
    case ErrorCode::InsufficientPatches: return "insufficient_patches";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::Solver: return "solver";
    case ErrorCode::NegativeScale: return "negative_scale";
    case ErrorCode::Candidate: return "candidate";
    case ErrorCode::Loss: return "loss";
    case ErrorCode::PipelineFailure: return "pipeline_failure";
    case ErrorCode::Spec: return "spec";
    case ErrorCode::Manifest: return "manifest";
    case ErrorCode::Format: return "format";
    case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace dpscale
