#pragma once

// Running several protocols side by side in separate memory.
//
// A composed agent state has one field per layer. Each layer
// writes only its own field but may read the whole tuple of both agents,
// which is how cross-layer triggers are written ("start the leader clock
// once the matching clock reached <max>"). Layers run in declaration order
// and see the fields already rewritten by earlier layers in the same
// interaction. Every layer reads the pre-interaction edge flag; only the
// flag proposed by the edge-owning layer is committed.

#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <type_traits>
#include <utility>

#include "netcon/engine.hpp"

namespace netcon {

namespace detail {

template <std::size_t I, class T>
struct FieldLeaf {
    T value;
    friend constexpr bool operator==(const FieldLeaf&, const FieldLeaf&) = default;
};

template <class Seq, class... Ts>
struct FieldsBase;

template <std::size_t... I, class... Ts>
struct FieldsBase<std::index_sequence<I...>, Ts...> : FieldLeaf<I, Ts>... {
    constexpr FieldsBase() = default;
    constexpr FieldsBase(Ts... values) : FieldLeaf<I, Ts>{std::move(values)}... {}
    friend constexpr bool operator==(const FieldsBase&, const FieldsBase&) = default;
};

}  // namespace detail

/// Tuple of per-layer fields. Unlike std::tuple it stays trivially copyable
/// when its fields are, which keeps composite transitions in registers.
template <class... Ts>
struct Fields : detail::FieldsBase<std::index_sequence_for<Ts...>, Ts...> {
    using detail::FieldsBase<std::index_sequence_for<Ts...>, Ts...>::FieldsBase;
    friend constexpr bool operator==(const Fields&, const Fields&) = default;
};

template <std::size_t I, class... Ts>
constexpr auto& get(Fields<Ts...>& f) noexcept {
    return static_cast<detail::FieldLeaf<I, std::tuple_element_t<I, std::tuple<Ts...>>>&>(f).value;
}

template <std::size_t I, class... Ts>
constexpr const auto& get(const Fields<Ts...>& f) noexcept {
    return static_cast<const detail::FieldLeaf<I, std::tuple_element_t<I, std::tuple<Ts...>>>&>(f).value;
}

/// A layer writing field `Field` of a composite state.
///
/// `Fn` is called as fn(const Composite& a, const Composite& b, bool edge)
/// and returns Transition<field type>.
template <std::size_t Field, class Fn>
struct Layer {
    static constexpr std::size_t field = Field;
    Fn fn;
};

template <std::size_t Field, class Fn>
constexpr Layer<Field, std::decay_t<Fn>> make_layer(Fn&& fn) {
    return {std::forward<Fn>(fn)};
}

/// Lifts a plain delta on field `Field` to a layer.
template <std::size_t Field, class Delta>
constexpr auto on_field(Delta delta) {
    return make_layer<Field>([delta](const auto& a, const auto& b, bool edge) {
        return delta(get<Field>(a), get<Field>(b), edge);
    });
}

/// Picks the edge-owning layer for an interaction, for compositions where
/// the owner changes between phases.
template <class Fn>
struct EdgeOwnerSelector {
    Fn fn;
};

template <class Fn>
constexpr EdgeOwnerSelector<std::decay_t<Fn>> edge_owner_by(Fn&& fn) {
    return {std::forward<Fn>(fn)};
}

template <class Composite, class Owner, class... Layers>
class ComposedDelta {
public:
    constexpr ComposedDelta(Owner owner, Layers... layers) : owner_(std::move(owner)), layers_(std::move(layers)...) {}

    Transition<Composite> operator()(const Composite& a, const Composite& b, bool edge) const {
        Composite na = a;
        Composite nb = b;
        const std::size_t owner = owner_index(a, b);
        bool committed_edge = edge;
        apply_layers(na, nb, edge, owner, committed_edge, std::index_sequence_for<Layers...>{});
        return {std::move(na), std::move(nb), committed_edge};
    }

    static constexpr std::size_t layer_count() noexcept { return sizeof...(Layers); }

private:
    std::size_t owner_index(const Composite& a, const Composite& b) const {
        if constexpr (std::is_same_v<Owner, std::size_t>) {
            return owner_;
        } else {
            const std::size_t owner = owner_.fn(a, b);
            if (owner >= sizeof...(Layers)) throw std::out_of_range("compose: edge owner selector out of range");
            return owner;
        }
    }

    template <std::size_t... K>
    void apply_layers(Composite& na, Composite& nb, bool edge, std::size_t owner, bool& committed_edge,
                      std::index_sequence<K...>) const {
        (apply_one<K>(na, nb, edge, owner, committed_edge), ...);
    }

    template <std::size_t K>
    void apply_one(Composite& na, Composite& nb, bool edge, std::size_t owner, bool& committed_edge) const {
        const auto& layer = std::get<K>(layers_);
        constexpr std::size_t field = std::tuple_element_t<K, std::tuple<Layers...>>::field;
        auto t = layer.fn(std::as_const(na), std::as_const(nb), edge);
        get<field>(na) = std::move(t.initiator);
        get<field>(nb) = std::move(t.responder);
        if (K == owner) committed_edge = t.edge;
    }

    Owner owner_;
    std::tuple<Layers...> layers_;
};

/// compose<Composite>(owner, layers...): `owner` is a fixed layer index or an
/// EdgeOwnerSelector. A fixed index outside the layer list is rejected.
template <class Composite, class... Layers>
auto compose(std::size_t edge_owner, Layers... layers) {
    static_assert(sizeof...(Layers) > 0, "compose needs at least one layer");
    if (edge_owner >= sizeof...(Layers)) throw std::out_of_range("compose: edge owner index out of range");
    return ComposedDelta<Composite, std::size_t, Layers...>(edge_owner, std::move(layers)...);
}

template <class Composite, class Fn, class... Layers>
auto compose(EdgeOwnerSelector<Fn> edge_owner, Layers... layers) {
    static_assert(sizeof...(Layers) > 0, "compose needs at least one layer");
    return ComposedDelta<Composite, EdgeOwnerSelector<Fn>, Layers...>(std::move(edge_owner), std::move(layers)...);
}

}  // namespace netcon

template <class... Ts>
struct std::tuple_size<netcon::Fields<Ts...>> : std::integral_constant<std::size_t, sizeof...(Ts)> {};

template <std::size_t I, class... Ts>
struct std::tuple_element<I, netcon::Fields<Ts...>> {
    using type = std::tuple_element_t<I, std::tuple<Ts...>>;
};
