#pragma once

#include <cstdint>
#include <initializer_list>
#include <type_traits>

namespace kelly {

// Small bitmask over an enum whose enumerators are 0, 1, 2, ...
template <class Enum>
class FlagSet {
    static_assert(std::is_enum_v<Enum>);

public:
    constexpr FlagSet() = default;
    constexpr FlagSet(std::initializer_list<Enum> flags) {
        for (Enum f : flags) set(f);
    }

    constexpr void set(Enum f) { bits_ |= bit(f); }
    constexpr void reset(Enum f) { bits_ &= ~bit(f); }
    constexpr bool has(Enum f) const { return (bits_ & bit(f)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint32_t bits() const { return bits_; }

    friend constexpr bool operator==(FlagSet, FlagSet) = default;

private:
    static constexpr std::uint32_t bit(Enum f) {
        return std::uint32_t{1} << static_cast<std::uint32_t>(f);
    }
    std::uint32_t bits_ = 0;
};

}  // namespace kelly
