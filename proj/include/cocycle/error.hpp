#pragma once

#include <stdexcept>
#include <string>

namespace cocycle {

enum class Errc {
    UnknownPreset,
    UnboundedQuotients,
    FiniteCF,
    MalformedAlpha,
    HeightOverflow,
    InsufficientSamples,
    WindowExceeded,
    PaperModeNotQueryable,
    MissingConstants,
    OverlappingIntervals,
    BadOrder,
    EmptyAfterFilter,
    BudgetExceeded,
    MissingEntries,
    ParseError,
    InvalidArgument,
};

inline const char* errc_name(Errc c) noexcept
{
    switch (c) {
    case Errc::UnknownPreset: return "UnknownPreset";
    case Errc::UnboundedQuotients: return "UnboundedQuotients";
    case Errc::FiniteCF: return "FiniteCF";
    case Errc::MalformedAlpha: return "MalformedAlpha";
    case Errc::HeightOverflow: return "HeightOverflow";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::WindowExceeded: return "WindowExceeded";
    case Errc::PaperModeNotQueryable: return "PaperModeNotQueryable";
    case Errc::MissingConstants: return "MissingConstants";
    case Errc::OverlappingIntervals: return "OverlappingIntervals";
    case Errc::BadOrder: return "BadOrder";
    case Errc::EmptyAfterFilter: return "EmptyAfterFilter";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::MissingEntries: return "MissingEntries";
    case Errc::ParseError: return "ParseError";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable code; what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Raised when a symbol window is too small for the orbit it is asked to follow.
/// `height` is the offending |phi_n| so callers can resize.
class WindowExceeded : public Error {
public:
    WindowExceeded(long long height, long long radius)
        : Error(Errc::WindowExceeded,
                "shift to height " + std::to_string(height) + " leaves window of radius " +
                    std::to_string(radius)),
          height_(height), radius_(radius)
    {
    }

    long long height() const noexcept { return height_; }
    long long radius() const noexcept { return radius_; }

private:
    long long height_;
    long long radius_;
};

} // namespace cocycle
