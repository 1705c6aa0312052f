#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace retune {

// Enumerator order is the tie-breaking order: hold < down < up.
enum class MovementLabel : unsigned char { hold = 0, down = 1, up = 2 };

inline constexpr std::size_t kLabelCount = 3;
inline constexpr std::array<MovementLabel, kLabelCount> kAllLabels{
    MovementLabel::hold, MovementLabel::down, MovementLabel::up};

constexpr std::size_t index_of(MovementLabel l) { return static_cast<std::size_t>(l); }

std::string_view to_string(MovementLabel l);

/// Exact lowercase match only; see parse_answer in response.hpp for the lenient form.
std::optional<MovementLabel> label_from_string(std::string_view s);

enum class SplitTag : unsigned char { train = 0, ood_stock = 1, ood_date = 2, ood_stock_date = 3 };

inline constexpr std::array<SplitTag, 4> kAllSplits{
    SplitTag::train, SplitTag::ood_stock, SplitTag::ood_date, SplitTag::ood_stock_date};

std::string_view to_string(SplitTag s);
std::optional<SplitTag> split_from_string(std::string_view s);

}  // namespace retune
