#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Word lists shared by the penalty checks and the offline mock editor.
namespace hardneg::lexicon {

/// "six" -> 6, "6" -> 6; nullopt for anything that is not a small count.
std::optional<int> number_value(std::string_view word_lower);
/// 6 -> "six" for 0..20 and the tens up to 100, else the decimal numeral.
std::string number_word(int n);

/// Mock counting cycle; each number steps to the next entry.
inline constexpr std::array<int, 12> kCountCycle = {2, 4, 6, 8, 10, 12, 1, 3, 5, 7, 9, 11};

inline constexpr std::array<std::string_view, 16> kPalette = {
    "red",   "orange", "yellow", "green", "blue",   "purple", "pink",  "brown",
    "black", "white",  "gray",   "silver", "gold",  "beige",  "teal",  "maroon",
};

/// Palette plus common color words that are recognized but never emitted.
bool is_color_word(std::string_view word_lower);
std::optional<std::size_t> palette_index(std::string_view word_lower);

/// Phrase -> replacement alternatives. Keys are lowercase and may span words.
using SubstitutionTable = std::map<std::string, std::vector<std::string>, std::less<>>;

const SubstitutionTable& size_table();
const SubstitutionTable& background_table();
const SubstitutionTable& spatial_table();
const SubstitutionTable& object_table();

}  // namespace hardneg::lexicon
