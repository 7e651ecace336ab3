#pragma once

// Template definitions for corpus.hpp.

#include <sstream>

#include "hardneg/text.hpp"

namespace hardneg {

template <class T>
JsonlReader<T>::JsonlReader(const std::filesystem::path& path, Decode decode)
    : in_(path, std::ios::binary), decode_(decode) {
  if (!in_) throw Error(Errc::Io, "cannot open " + path.string());
}

template <class T>
Parsed<T> parse_line(std::string_view line, std::size_t line_no, T (*decode)(const json&)) {
  if (!text::is_valid_utf8(line)) return LineError{line_no, "invalid UTF-8"};
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return LineError{line_no, std::string("invalid JSON: ") + e.what()};
  }
  try {
    return decode(j);
  } catch (const Error& e) {
    return LineError{line_no, e.what()};
  } catch (const json::exception& e) {
    return LineError{line_no, std::string("schema: ") + e.what()};
  }
}

template <class T>
std::optional<Parsed<T>> JsonlReader<T>::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    return parse_line<T>(line, line_no_, decode_);
  }
  return std::nullopt;
}

template <class T>
LoadResult<T> load_collect(const std::filesystem::path& path, T (*decode)(const json&)) {
  LoadResult<T> out;
  JsonlReader<T> reader(path, decode);
  while (auto item = reader.next()) {
    if (auto* rec = std::get_if<T>(&*item))
      out.records.push_back(std::move(*rec));
    else
      out.errors.push_back(std::get<LineError>(*item));
  }
  return out;
}

template <class T>
std::vector<T> load_strict(const std::filesystem::path& path, T (*decode)(const json&)) {
  auto res = load_collect<T>(path, decode);
  if (!res.errors.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": " << res.errors.size() << " malformed line(s)";
    for (const auto& e : res.errors) msg << "\n  line " << e.line_no << ": " << e.reason;
    throw Error(Errc::MalformedLine, msg.str(), res.errors.front().line_no);
  }
  return std::move(res.records);
}

template <class T>
std::size_t write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  for (const auto& r : records) out << dump_line(to_json(r)) << '\n';
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
  return records.size();
}

}  // namespace hardneg
