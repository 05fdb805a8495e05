#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "netcon/engine.hpp"

namespace netcon {

/// L leader, F free, H head, T tail, R inside the line, D dismantler.
enum class LineState : std::uint8_t { L, F, H, T, R, D };

inline std::string to_string(LineState s) {
    constexpr const char* names[] = {"L", "F", "H", "T", "R", "D"};
    return names[static_cast<int>(s)];
}

namespace detail {

constexpr std::optional<Transition<LineState>> line_rule(LineState a, LineState b, bool edge) noexcept {
    using S = LineState;
    if (!edge) {
        if (a == S::L && b == S::F) return Transition<S>{S::H, S::T, true};   // form head and tail
        if (a == S::H && b == S::F) return Transition<S>{S::R, S::H, true};   // extend the line
        if (a == S::L && b == S::L) return Transition<S>{S::L, S::F, false};  // backup: surplus leader
        if (a == S::L && b == S::H) return Transition<S>{S::F, S::H, false};  // backup: leader meets a head
        if (a == S::H && b == S::H) return Transition<S>{S::H, S::D, false};  // backup: surplus line
    } else {
        if (a == S::D && b == S::R) return Transition<S>{S::F, S::D, false};
        if (a == S::D && b == S::T) return Transition<S>{S::F, S::F, false};
    }
    return std::nullopt;
}

}  // namespace detail

/// Line formation with its backup rules. A rule fires when either ordering of
/// the pair matches its left-hand side; roles keep their positions.
constexpr Transition<LineState> line_formation_delta(LineState a, LineState b, bool edge) noexcept {
    if (auto t = detail::line_rule(a, b, edge)) return *t;
    if (auto t = detail::line_rule(b, a, edge)) return {t->responder, t->initiator, t->edge};
    return {a, b, edge};
}

struct LineFormationDelta {
    constexpr Transition<LineState> operator()(LineState a, LineState b, bool edge) const noexcept {
        return line_formation_delta(a, b, edge);
    }
};

}  // namespace netcon
