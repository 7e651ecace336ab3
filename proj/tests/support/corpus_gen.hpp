#pragma once

// Synthetic SFT corpus whose responses the mock editor can always edit:
// every category template carries a number, palette color, polarity word or
// table phrase.

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/rng.hpp"

namespace testkit {

inline const std::vector<std::string> kAnimals = {"dog", "cat", "horse", "cow", "giraffe", "zebra", "elephant", "bear"};
inline const std::vector<std::string> kAnimalsPl = {"dogs", "cats", "horses", "cows", "giraffes", "zebras", "elephants", "bears"};
inline const std::vector<std::string> kThings = {"table", "chair", "couch", "car", "truck", "bus", "boat", "bicycle"};
inline const std::vector<std::string> kColors = {"red", "blue", "green", "yellow", "black", "white", "brown", "orange"};
inline const std::vector<std::string> kNumbers = {"two", "three", "four", "five", "six", "seven"};

inline hardneg::SftSample make_sample(std::string id, std::string instruction, std::string response) {
  hardneg::SftSample s;
  s.image_ref = "images/" + id + ".jpg";
  s.id = std::move(id);
  s.conversations = {{hardneg::Speaker::Human, "<image>\n" + std::move(instruction)},
                     {hardneg::Speaker::Assistant, std::move(response)}};
  return s;
}

/// Round-robins the ten category templates; fillers drawn from `seed`.
inline std::vector<hardneg::SftSample> synth_sft(std::size_t n, std::uint64_t seed) {
  hardneg::Rng rng(seed);
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& { return v[rng.below(v.size())]; };
  std::vector<hardneg::SftSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "s" + std::to_string(i);
    const auto a = rng.below(kAnimals.size());
    const auto& animal = kAnimals[a];
    const auto& animals = kAnimalsPl[a];
    const auto& thing = pick(kThings);
    switch (i % 10) {
      case 0:
        out.push_back(make_sample(id, "What is the " + animal + " doing in the image?",
                                  "The " + animal + " is sitting next to the " + thing + "."));
        break;
      case 1: {
        const auto& c = pick(kColors);
        out.push_back(make_sample(id, "What color is the " + thing + " in the image?",
                                  "The " + thing + " in the image is " + c + "."));
        break;
      }
      case 2:
        out.push_back(make_sample(id, "What is the size of the " + thing + "?",
                                  "The " + thing + " is large and takes up most of the frame."));
        break;
      case 3:
        out.push_back(make_sample(id, "What is the weather like in the image?",
                                  "The weather is sunny, and the " + animal + " stands in an open field."));
        break;
      case 4: {
        const auto& num = pick(kNumbers);
        out.push_back(make_sample(id, "How many " + animals + " are visible in the image?",
                                  "There are " + num + " " + animals + " visible in the image."));
        break;
      }
      case 5:
        out.push_back(make_sample(id, "Where is the " + animal + " located in the image?",
                                  "The " + animal + " is on the left side, near the " + thing + "."));
        break;
      case 6:
        if ((i / 10) % 2 == 0)
          out.push_back(make_sample(id, "Is there a " + animal + " in the image?",
                                    "Yes, there is a " + animal + " in the image."));
        else
          out.push_back(make_sample(id, "Is there a " + thing + " in the picture?",
                                    "No, there is no " + thing + " in the picture."));
        break;
      case 7:
        out.push_back(make_sample(id, "What might be the reason the " + animal + " is resting?",
                                  "The " + animal + " is probably lying down because it is tired after walking."));
        break;
      case 8: {
        const auto& num = pick(kNumbers);
        out.push_back(make_sample(id, "How many " + animals + " are there and where are they located?",
                                  "There are " + num + " " + animals + " standing on the left of the " + thing + "."));
        break;
      }
      default: {
        const auto& c = pick(kColors);
        const auto& num = pick(kNumbers);
        out.push_back(make_sample(id, "Describe the image in detail.",
                                  "The image shows a large " + c + " " + thing + " parked on a street, with " + num +
                                      " people standing next to it while a " + animal + " waits nearby."));
        break;
      }
    }
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hardneg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testkit
