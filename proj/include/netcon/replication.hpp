#pragma once

// Self-replication of information strands.
//
// A strand is a path H - R ... R - T of agents, each storing one bit and its
// position modulo 3 counted from the head. The position lets an agent tell
// which neighbor is closer to the head. Replication pulls the bits out of
// the old strand towards its head, pushes them across a temporary bridging
// edge into a new head and down the new strand, which grows one free agent
// at a time until the tail bit arrives.
//
// Buffers of the old (source) strand: phi, phi^H, |B|^H.
// Buffers of the new strand:          psi, psi^N, psi^T, |B|^T.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "netcon/engine.hpp"

namespace netcon {

enum class Role : std::uint8_t { free, head, tail, regular };

struct BitSlot {
    std::uint8_t bit = 0;
    std::uint8_t pos = 0;  // position mod 3, head at 0

    friend constexpr bool operator==(const BitSlot&, const BitSlot&) = default;
};

struct Buffer {
    enum class Kind : std::uint8_t {
        phi,    // neutral
        phi_h,  // empty, requesting bits towards the head
        bit_h,  // bit travelling towards the head
        psi,    // new strand end, awaiting instructions
        psi_t,  // empty, accepting bits towards the tail
        psi_n,  // extension requested
        bit_t,  // bit travelling towards the tail
    };

    Kind kind = Kind::phi;
    std::uint8_t bit = 0;
    bool tail = false;  // for bit_h / bit_t: the message is the tail bit

    static constexpr Buffer of(Kind kind) noexcept { return {kind, 0, false}; }
    static constexpr Buffer to_head(std::uint8_t bit, bool tail) noexcept { return {Kind::bit_h, bit, tail}; }
    static constexpr Buffer to_tail(std::uint8_t bit, bool tail) noexcept { return {Kind::bit_t, bit, tail}; }

    constexpr bool is(Kind k) const noexcept { return kind == k; }

    friend constexpr bool operator==(const Buffer&, const Buffer&) = default;
};

/// <Role, B_i, Buffer>. Free agents and freshly attached agents ("*") have no slot.
struct ReplicationAgentState {
    Role role = Role::free;
    std::optional<BitSlot> slot;
    Buffer buffer;

    static constexpr ReplicationAgentState free_agent() noexcept { return {}; }

    constexpr bool is_free() const noexcept { return role == Role::free; }
    constexpr bool is_unset() const noexcept { return role == Role::regular && !slot && buffer.is(Buffer::Kind::psi); }

    friend constexpr bool operator==(const ReplicationAgentState&, const ReplicationAgentState&) = default;
};

inline std::string to_string(const ReplicationAgentState& s);

namespace detail {

constexpr std::uint8_t next_pos(std::uint8_t pos) noexcept { return static_cast<std::uint8_t>((pos + 1) % 3); }

/// `toward_head` sits one step closer to the head than `agent`.
constexpr bool precedes(const ReplicationAgentState& toward_head, const ReplicationAgentState& agent) noexcept {
    return toward_head.slot && agent.slot && next_pos(toward_head.slot->pos) == agent.slot->pos;
}

constexpr bool head_or_regular(const ReplicationAgentState& s) noexcept {
    return s.role == Role::head || s.role == Role::regular;
}

/// <H, B_0, .>: a head holding its bit at position 0.
constexpr bool head_at_zero(const ReplicationAgentState& s) noexcept {
    return s.role == Role::head && s.slot && s.slot->pos == 0;
}

/// Rules R1-R12 with `x` in the left-hand (first) position.
constexpr std::optional<Transition<ReplicationAgentState>> replication_rule(const ReplicationAgentState& x,
                                                                            const ReplicationAgentState& y,
                                                                            bool edge) noexcept {
    using K = Buffer::Kind;
    using T = Transition<ReplicationAgentState>;
    ReplicationAgentState nx = x;
    ReplicationAgentState ny = y;

    if (!edge) {
        // R1: a neutral head recruits the new head and bridges to it.
        if (head_at_zero(x) && x.buffer.is(K::phi) && y.is_free()) {
            nx.buffer = Buffer::of(K::phi_h);
            ny = {Role::head, x.slot, Buffer::of(K::psi)};
            return T{nx, ny, true};
        }
        // R10: the requesting end of the new strand attaches a free agent "*".
        if (head_or_regular(x) && x.slot && x.buffer.is(K::psi_n) && y.is_free()) {
            nx.buffer = Buffer::of(K::psi_t);
            ny = {Role::regular, std::nullopt, Buffer::of(K::psi)};
            return T{nx, ny, true};
        }
        return std::nullopt;
    }

    // R2: a neutral agent behind a phi^H agent loads its own bit.
    if ((x.role == Role::regular || x.role == Role::tail) && x.slot && x.buffer.is(K::phi) &&
        head_or_regular(y) && y.buffer.is(K::phi_h) && precedes(y, x)) {
        nx.buffer = Buffer::to_head(x.slot->bit, x.role == Role::tail);
        return T{nx, ny, true};
    }
    // R3 / R4: a head-bound bit moves one edge towards the head. Moving the
    // tail bit restores the sender to neutral.
    if ((x.role == Role::regular || (x.role == Role::tail && x.buffer.tail)) && x.buffer.is(K::bit_h) &&
        head_or_regular(y) && y.buffer.is(K::phi_h) && precedes(y, x)) {
        nx.buffer = x.buffer.tail ? Buffer::of(K::phi) : Buffer::of(K::phi_h);
        ny.buffer = x.buffer;
        return T{nx, ny, true};
    }
    // R5 / R6: transfer across the bridge; the tail bit also removes it.
    if (head_at_zero(x) && x.buffer.is(K::bit_h) && head_at_zero(y) && y.buffer.is(K::psi_t)) {
        ny.buffer = Buffer::to_tail(x.buffer.bit, x.buffer.tail);
        if (x.buffer.tail) {
            nx.buffer = Buffer::of(K::phi);
            return T{nx, ny, false};
        }
        nx.buffer = Buffer::of(K::phi_h);
        return T{nx, ny, true};
    }
    // R9, head side: the first bit waits at the old head, the new head asks to extend.
    if (head_at_zero(x) && x.buffer.is(K::bit_h) && !x.buffer.tail && head_at_zero(y) && y.buffer.is(K::psi)) {
        ny.buffer = Buffer::of(K::psi_n);
        return T{nx, ny, true};
    }
    if (head_or_regular(x) && x.slot && x.buffer.is(K::bit_t) && y.role == Role::regular) {
        // R7 / R8: a tail-bound bit moves on; the tail bit leaves the sender neutral.
        if (y.slot && y.buffer.is(K::psi_t) && precedes(x, y)) {
            nx.buffer = x.buffer.tail ? Buffer::of(K::phi) : Buffer::of(K::psi_t);
            ny.buffer = x.buffer;
            return T{nx, ny, true};
        }
        // R9: the bit reached the last stored agent, which requests one more.
        // Also fires for the tail bit and for the new head as sender; with
        // only the literal non-tail, regular-sender form a strand stalls as
        // soon as the bit after B_1 (or the tail bit) reaches its end.
        if (y.slot && y.buffer.is(K::psi) && precedes(x, y)) {
            ny.buffer = Buffer::of(K::psi_n);
            return T{nx, ny, true};
        }
        if (y.is_unset()) {
            const BitSlot slot{x.buffer.bit, next_pos(x.slot->pos)};
            // R11: a non-tail bit settles in the fresh agent.
            if (!x.buffer.tail) {
                nx.buffer = Buffer::of(K::psi_t);
                ny.slot = slot;
                return T{nx, ny, true};
            }
            // R12: the tail bit crowns the fresh agent as the new tail.
            if (x.role == Role::regular) {
                nx.buffer = Buffer::of(K::phi);
                ny = {Role::tail, slot, Buffer::of(K::phi)};
                return T{nx, ny, true};
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// R1-R12. Strand orientation is independent of which agent the scheduler
/// made the initiator, so each rule is tried with both orderings of the pair.
constexpr Transition<ReplicationAgentState> replication_delta(const ReplicationAgentState& a,
                                                              const ReplicationAgentState& b, bool edge) noexcept {
    if (auto t = detail::replication_rule(a, b, edge)) return *t;
    if (auto t = detail::replication_rule(b, a, edge)) return {t->responder, t->initiator, t->edge};
    return {a, b, edge};
}

struct ReplicationDelta {
    constexpr Transition<ReplicationAgentState> operator()(const ReplicationAgentState& a,
                                                           const ReplicationAgentState& b,
                                                           bool edge) const noexcept {
        return replication_delta(a, b, edge);
    }
};

/// The k-bit message of a strand, k >= 3.
struct StrandSpec {
    std::vector<std::uint8_t> bits;

    StrandSpec() = default;
    explicit StrandSpec(std::vector<std::uint8_t> b) : bits(std::move(b)) { validate(); }

    static StrandSpec parse(std::string_view text) {
        std::vector<std::uint8_t> bits;
        for (char c : text) {
            if (c == '0' || c == '1') bits.push_back(static_cast<std::uint8_t>(c - '0'));
            else throw std::invalid_argument("strand bits must be 0/1, got '" + std::string(1, c) + "'");
        }
        return StrandSpec(std::move(bits));
    }

    std::size_t size() const noexcept { return bits.size(); }

    std::string str() const {
        std::string out;
        for (auto b : bits) out.push_back(static_cast<char>('0' + b));
        return out;
    }

    void validate() const {
        if (bits.size() < 3) throw std::invalid_argument("strand needs at least 3 bits");
        for (auto b : bits)
            if (b > 1) throw std::invalid_argument("strand bits must be 0/1");
    }

    friend bool operator==(const StrandSpec&, const StrandSpec&) = default;
};

/// One strand spec per non-empty line; '#' starts a comment line.
inline std::vector<StrandSpec> load_strand_specs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open strand file '" + path + "'");
    std::vector<StrandSpec> specs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }),
                   line.end());
        if (line.empty() || line.front() == '#') continue;
        try {
            specs.push_back(StrandSpec::parse(line));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return specs;
}

/// Turns the k lowest-id free agents into a neutral strand. Returns the head.
inline AgentId seed_strand(Configuration<ReplicationAgentState>& config, const StrandSpec& spec) {
    spec.validate();
    std::vector<AgentId> chosen;
    for (AgentId u = 0; u < config.size() && chosen.size() < spec.size(); ++u)
        if (config.states[u].is_free()) chosen.push_back(u);
    if (chosen.size() < spec.size())
        throw std::invalid_argument("seed_strand: " + std::to_string(spec.size()) + " free agents needed, " +
                                    std::to_string(chosen.size()) + " available");
    const std::size_t k = spec.size();
    for (std::size_t j = 0; j < k; ++j) {
        const Role role = j == 0 ? Role::head : (j + 1 == k ? Role::tail : Role::regular);
        config.states[chosen[j]] = {role, BitSlot{spec.bits[j], static_cast<std::uint8_t>(j % 3)},
                                    Buffer::of(Buffer::Kind::phi)};
        if (j > 0) config.edges.set(chosen[j - 1], chosen[j], true);
    }
    return chosen.front();
}

struct ExtractedStrand {
    AgentId head = 0;
    std::vector<AgentId> agents;  // head to tail
    std::string bits;             // stored bits in order; '*' for a slot not yet filled
    bool complete = false;        // H ... T path with every slot filled and consistent positions
    bool neutral = false;         // every buffer phi
    bool settled = false;         // complete and no new-strand buffer (psi family, |B|^T) left

    friend bool operator==(const ExtractedStrand&, const ExtractedStrand&) = default;
};

namespace detail {

inline bool is_bridge(const Configuration<ReplicationAgentState>& config, AgentId u, AgentId v) {
    return config.states[u].role == Role::head && config.states[v].role == Role::head;
}

inline bool construction_buffer(const Buffer& b) {
    using K = Buffer::Kind;
    return b.is(K::psi) || b.is(K::psi_t) || b.is(K::psi_n) || b.is(K::bit_t);
}

}  // namespace detail

/// Walks one strand from its head, ignoring the bridge edge.
inline ExtractedStrand extract_strand_from(const Configuration<ReplicationAgentState>& config, AgentId head) {
    ExtractedStrand out;
    out.head = head;
    bool consistent = config.states[head].role == Role::head;
    std::optional<AgentId> previous;
    AgentId current = head;
    for (;;) {
        out.agents.push_back(current);
        const auto& s = config.states[current];
        const std::size_t index = out.agents.size() - 1;
        if (s.slot) {
            out.bits.push_back(static_cast<char>('0' + s.slot->bit));
            if (s.slot->pos != index % 3) consistent = false;
        } else {
            out.bits.push_back('*');
            consistent = false;
        }
        if (index > 0 && s.role == Role::head) consistent = false;

        std::optional<AgentId> next;
        std::size_t strand_degree = 0;
        for (AgentId v : config.edges.neighbors(current)) {
            if (config.states[v].is_free() || detail::is_bridge(config, current, v)) continue;
            ++strand_degree;
            if (!previous || v != *previous) next = v;
        }
        const std::size_t allowed = index == 0 ? 1 : 2;
        if (strand_degree > allowed) consistent = false;
        if (s.role == Role::tail) {
            if (next) consistent = false;
            break;
        }
        if (!next || out.agents.size() > config.size()) {
            consistent = false;
            break;
        }
        previous = current;
        current = *next;
    }
    const auto& last = config.states[out.agents.back()];
    out.complete = consistent && out.agents.size() >= 3 && last.role == Role::tail;
    out.neutral = std::all_of(out.agents.begin(), out.agents.end(), [&](AgentId u) {
        return config.states[u].buffer.is(Buffer::Kind::phi);
    });
    out.settled = out.complete && std::none_of(out.agents.begin(), out.agents.end(), [&](AgentId u) {
        return detail::construction_buffer(config.states[u].buffer);
    });
    return out;
}

/// Every strand (maximal path of non-free agents) in head-id order.
/// Structures without a head are reported from their lowest id as incomplete.
inline std::vector<ExtractedStrand> extract_strands(const Configuration<ReplicationAgentState>& config) {
    std::vector<ExtractedStrand> out;
    std::vector<bool> seen(config.size(), false);
    for (AgentId u = 0; u < config.size(); ++u) {
        if (config.states[u].role != Role::head) continue;
        auto strand = extract_strand_from(config, u);
        for (AgentId v : strand.agents) seen[v] = true;
        out.push_back(std::move(strand));
    }
    for (AgentId u = 0; u < config.size(); ++u) {
        if (seen[u] || config.states[u].is_free()) continue;
        ExtractedStrand orphan;
        orphan.head = u;
        std::vector<AgentId> stack{u};
        seen[u] = true;
        while (!stack.empty()) {
            const AgentId v = stack.back();
            stack.pop_back();
            orphan.agents.push_back(v);
            for (AgentId w : config.edges.neighbors(v))
                if (!seen[w] && !config.states[w].is_free()) {
                    seen[w] = true;
                    stack.push_back(w);
                }
        }
        std::sort(orphan.agents.begin(), orphan.agents.end());
        for (AgentId v : orphan.agents) {
            const auto& slot = config.states[v].slot;
            orphan.bits.push_back(slot ? static_cast<char>('0' + slot->bit) : '*');
        }
        orphan.neutral = std::all_of(orphan.agents.begin(), orphan.agents.end(), [&](AgentId v) {
            return config.states[v].buffer.is(Buffer::Kind::phi);
        });
        out.push_back(std::move(orphan));
    }
    return out;
}

/// Free-agent pool default for l copies of a k-bit strand.
constexpr std::size_t default_replication_population(std::size_t k, std::size_t copies) noexcept {
    return 4 * copies * k + 64;
}

inline std::string to_string(const ReplicationAgentState& s) {
    using K = Buffer::Kind;
    if (s.is_free()) return "F";
    std::string out = "<";
    switch (s.role) {
        case Role::head: out += "H"; break;
        case Role::tail: out += "T"; break;
        default: out += "R"; break;
    }
    out += ",";
    out += s.slot ? std::to_string(s.slot->bit) + "@" + std::to_string(s.slot->pos) : "*";
    out += ",";
    const std::string bit = std::to_string(s.buffer.bit) + (s.buffer.tail ? "T" : "");
    switch (s.buffer.kind) {
        case K::phi: out += "phi"; break;
        case K::phi_h: out += "phiH"; break;
        case K::bit_h: out += "|" + bit + "|H"; break;
        case K::psi: out += "psi"; break;
        case K::psi_t: out += "psiT"; break;
        case K::psi_n: out += "psiN"; break;
        case K::bit_t: out += "|" + bit + "|T"; break;
    }
    return out + ">";
}

}  // namespace netcon
