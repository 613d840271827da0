#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lvse/grid.hpp"

namespace lvse::net {

/// Reads a sectioned feeder description. Throws ParseError with the line number
/// on malformed input and ModelError when the described grid is invalid.
GridModel load_feeder(const std::filesystem::path& path);
GridModel parse_feeder(std::string_view text, std::string_view source_name = "<feeder>");

/// Renders `g` in the feeder file format; `parse_feeder(write_feeder(g))` reproduces `g`.
std::string write_feeder(const GridModel& g);

/// Line types from a file that may hold only a `[linetypes]` section.
std::vector<LineType> parse_line_types(std::string_view text, std::string_view source_name = "<linetypes>");

/// A single-branch feeder used in tests and examples: MV source, transformer,
/// LV bus and one consumer node.
std::string_view two_node_feeder_text();

/// Built-in synthetic unbalanced LV feeder (4x100 mains, 2x22 service drops).
std::string_view synthetic_feeder_text();
GridModel synthetic_feeder();

}  // namespace lvse::net
