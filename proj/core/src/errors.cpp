#include "homloop/errors.hpp"

namespace homloop {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotASaddle: return "NotASaddle";
        case ErrorCode::TangentEigenvector: return "TangentEigenvector";
        case ErrorCode::ProbeAmbiguous: return "ProbeAmbiguous";
        case ErrorCode::ZeroField: return "ZeroField";
        case ErrorCode::FieldVanishesOnGrid: return "FieldVanishesOnGrid";
        case ErrorCode::InvalidSystem: return "InvalidSystem";
        case ErrorCode::SlidingDetected: return "SlidingDetected";
        case ErrorCode::NonTransversalCrossing: return "NonTransversalCrossing";
        case ErrorCode::StepFailure: return "StepFailure";
        case ErrorCode::IntervalOutOfRange: return "IntervalOutOfRange";
        case ErrorCode::HorizonTooShort: return "HorizonTooShort";
        case ErrorCode::NotOnTransversal: return "NotOnTransversal";
        case ErrorCode::PassageLeftRegion: return "PassageLeftRegion";
        case ErrorCode::NoConnection: return "NoConnection";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::WrongSection: return "WrongSection";
        case ErrorCode::MissedTransversal: return "MissedTransversal";
        case ErrorCode::WeightOverflow: return "WeightOverflow";
        case ErrorCode::DegenerateZero: return "DegenerateZero";
        case ErrorCode::OffSection: return "OffSection";
        case ErrorCode::OutOfChart: return "OutOfChart";
        case ErrorCode::BandViolation: return "BandViolation";
        case ErrorCode::LeftRegion: return "LeftRegion";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::InsufficientGrid: return "InsufficientGrid";
        case ErrorCode::ConfigParse: return "ConfigParse";
    }
    return "Unknown";
}

bool is_contract_violation(ErrorCode code) {
    return code == ErrorCode::BandViolation;
}

}  // namespace homloop
