#include "hardneg/editgen/lexicon.hpp"

#include <algorithm>
#include <charconv>

namespace hardneg::lexicon {

namespace {

constexpr std::array<std::string_view, 21> kSmall = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty",
};

constexpr std::array<std::string_view, 8> kTens = {"thirty", "forty", "fifty", "sixty",
                                                   "seventy", "eighty", "ninety", "hundred"};

constexpr std::array<std::string_view, 22> kExtraColors = {
    "grey",   "tan",    "navy",    "turquoise", "lavender", "violet", "cream",  "ivory",
    "cyan",   "magenta", "olive",  "crimson",   "scarlet",  "indigo", "khaki",  "coral",
    "bronze", "copper", "golden",  "burgundy",  "sepia",    "amber",
};

}  // namespace

std::optional<int> number_value(std::string_view w) {
  for (std::size_t i = 0; i < kSmall.size(); ++i)
    if (kSmall[i] == w) return static_cast<int>(i);
  for (std::size_t i = 0; i < kTens.size(); ++i)
    if (kTens[i] == w) return static_cast<int>(30 + 10 * i);
  if (w.empty() || w.size() > 6) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || p != w.data() + w.size() || v < 0) return std::nullopt;
  return v;
}

std::string number_word(int n) {
  if (n >= 0 && n <= 20) return std::string(kSmall[static_cast<std::size_t>(n)]);
  if (n >= 30 && n <= 100 && n % 10 == 0) return std::string(kTens[static_cast<std::size_t>((n - 30) / 10)]);
  return std::to_string(n);
}

std::optional<std::size_t> palette_index(std::string_view w) {
  for (std::size_t i = 0; i < kPalette.size(); ++i)
    if (kPalette[i] == w) return i;
  return std::nullopt;
}

bool is_color_word(std::string_view w) {
  return palette_index(w).has_value() ||
         std::find(kExtraColors.begin(), kExtraColors.end(), w) != kExtraColors.end();
}

const SubstitutionTable& size_table() {
  static const SubstitutionTable t = {
      {"big", {"small", "tiny"}},        {"bigger", {"smaller"}},          {"biggest", {"smallest"}},
      {"small", {"large", "big"}},       {"smaller", {"larger", "bigger"}}, {"smallest", {"largest"}},
      {"large", {"small", "tiny"}},      {"larger", {"smaller"}},          {"largest", {"smallest"}},
      {"tall", {"short"}},               {"taller", {"shorter"}},          {"tallest", {"shortest"}},
      {"short", {"tall", "long"}},       {"shorter", {"taller", "longer"}}, {"huge", {"tiny", "small"}},
      {"tiny", {"huge", "large"}},       {"massive", {"small", "tiny"}},   {"little", {"big", "large"}},
      {"long", {"short"}},               {"longer", {"shorter"}},          {"wide", {"narrow"}},
      {"narrow", {"wide"}},              {"thick", {"thin"}},              {"thin", {"thick"}},
      {"giant", {"tiny", "miniature"}},  {"enormous", {"tiny"}},           {"medium-sized", {"oversized"}},
      {"oversized", {"undersized"}},     {"high", {"low"}},                {"low", {"high"}},
      {"deep", {"shallow"}},             {"shallow", {"deep"}},
  };
  return t;
}

const SubstitutionTable& background_table() {
  static const SubstitutionTable t = {
      {"day", {"night"}},               {"daytime", {"nighttime"}},        {"nighttime", {"daytime"}},
      {"night", {"day"}},               {"sunny", {"cloudy", "rainy"}},    {"cloudy", {"sunny", "clear"}},
      {"clear", {"cloudy", "overcast"}}, {"overcast", {"sunny"}},          {"rainy", {"sunny", "dry"}},
      {"snowy", {"sunny", "rainy"}},    {"snow", {"sand", "grass"}},       {"foggy", {"clear"}},
      {"indoors", {"outdoors"}},        {"outdoors", {"indoors"}},         {"indoor", {"outdoor"}},
      {"outdoor", {"indoor"}},          {"morning", {"evening"}},          {"evening", {"morning"}},
      {"afternoon", {"night"}},         {"sunset", {"sunrise"}},           {"sunrise", {"sunset"}},
      {"summer", {"winter"}},           {"winter", {"summer"}},            {"spring", {"autumn"}},
      {"autumn", {"spring"}},           {"fall", {"spring"}},              {"bright", {"dim", "dark"}},
      {"dark", {"bright"}},             {"dim", {"bright"}},               {"urban", {"rural"}},
      {"rural", {"urban"}},             {"city", {"countryside"}},         {"countryside", {"city"}},
      {"beach", {"forest", "park"}},    {"forest", {"desert", "beach"}},   {"desert", {"forest"}},
      {"field", {"parking lot"}},       {"woods", {"city"}},               {"street", {"beach"}},
      {"kitchen", {"bathroom"}},        {"bathroom", {"kitchen"}},         {"bedroom", {"office"}},
      {"office", {"bedroom"}},
  };
  return t;
}

const SubstitutionTable& spatial_table() {
  static const SubstitutionTable t = {
      {"left", {"right"}},              {"right", {"left"}},              {"above", {"below"}},
      {"below", {"above"}},             {"top", {"bottom"}},              {"bottom", {"top"}},
      {"in front of", {"behind"}},      {"behind", {"in front of"}},      {"front", {"back"}},
      {"back", {"front"}},              {"under", {"on top of"}},         {"on top of", {"under"}},
      {"underneath", {"above"}},        {"beneath", {"above"}},           {"inside", {"outside"}},
      {"outside", {"inside"}},          {"near", {"far from"}},           {"far from", {"near"}},
      {"next to", {"across from", "behind"}}, {"beside", {"behind"}},    {"over", {"under"}},
      {"up", {"down"}},                 {"down", {"up"}},                 {"center", {"corner"}},
      {"middle", {"edge"}},             {"edge", {"middle"}},             {"corner", {"center"}},
      {"foreground", {"background"}},   {"background", {"foreground"}},   {"nearby", {"far away"}},
      {"upstairs", {"downstairs"}},     {"downstairs", {"upstairs"}},     {"outdoors", {"indoors"}},
      {"indoors", {"outdoors"}},        {"surrounded by", {"away from"}},
  };
  return t;
}

const SubstitutionTable& object_table() {
  static const SubstitutionTable t = {
      {"sitting", {"standing", "lying"}}, {"standing", {"sitting", "kneeling"}}, {"walking", {"running", "sitting"}},
      {"running", {"walking"}},           {"lying", {"sitting"}},               {"sleeping", {"eating", "sitting"}},
      {"eating", {"drinking", "sleeping"}}, {"drinking", {"eating"}},           {"riding", {"pushing", "washing"}},
      {"holding", {"dropping", "throwing"}}, {"playing", {"watching"}},         {"watching", {"ignoring"}},
      {"reading", {"writing"}},           {"writing", {"reading"}},             {"swimming", {"surfing"}},
      {"surfing", {"swimming"}},          {"flying", {"landing"}},              {"parked", {"moving"}},
      {"man", {"woman"}},                 {"woman", {"man"}},                   {"men", {"women"}},
      {"women", {"men"}},                 {"boy", {"girl"}},                    {"girl", {"boy"}},
      {"dog", {"cat"}},                   {"dogs", {"cats"}},                   {"cat", {"dog"}},
      {"cats", {"dogs"}},                 {"horse", {"cow"}},                   {"cow", {"horse"}},
      {"car", {"truck", "bus"}},          {"cars", {"trucks"}},                 {"truck", {"car", "van"}},
      {"bus", {"train", "truck"}},        {"train", {"bus"}},                   {"bicycle", {"motorcycle"}},
      {"motorcycle", {"bicycle"}},        {"airplane", {"helicopter"}},         {"plane", {"helicopter"}},
      {"boat", {"ship", "canoe"}},        {"table", {"desk", "bench"}},         {"desk", {"table"}},
      {"chair", {"stool", "couch"}},      {"couch", {"bed", "chair"}},          {"bed", {"couch"}},
      {"laptop", {"tablet"}},             {"phone", {"camera"}},                {"pizza", {"sandwich"}},
      {"sandwich", {"burger"}},           {"cake", {"pie"}},                    {"chocolate", {"strawberry", "vanilla"}},
      {"banana", {"apple"}},              {"bananas", {"apples"}},              {"apple", {"orange"}},
      {"umbrella", {"kite"}},             {"kite", {"balloon"}},                {"ball", {"frisbee"}},
      {"frisbee", {"ball"}},              {"surfboard", {"skateboard"}},        {"skateboard", {"surfboard"}},
      {"propeller", {"jet engines"}},     {"wood", {"tile", "carpet"}},         {"hard wood", {"carpeted"}},
      {"grass", {"sand", "gravel"}},      {"tree", {"pole"}},                   {"trees", {"poles"}},
      {"sign", {"billboard"}},            {"clock", {"mirror"}},                {"toilet", {"bathtub"}},
      {"sink", {"bathtub"}},              {"giraffe", {"zebra"}},               {"zebra", {"giraffe"}},
      {"elephant", {"rhino"}},            {"bear", {"dog"}},                    {"bird", {"bat"}},
      {"birds", {"bats"}},                {"people", {"animals"}},              {"person", {"statue"}},
      {"player", {"referee"}},            {"glasses", {"a hat"}},               {"hat", {"helmet"}},
  };
  return t;
}

}  // namespace hardneg::lexicon
