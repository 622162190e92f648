#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "chipcost/library.hpp"
#include "chipcost/system.hpp"

namespace chipcost {

/// Current version of the XML schema documented in SCHEMA.md.
inline constexpr int kSchemaVersion = 1;

/// Parses one library XML document. `source` is used in error messages.
ProcessLibrary ParseLibraryXml(std::string_view xml, const std::string& source);

/// Loads every `*.xml` file in `directory` into one library. Files are read in
/// sorted order; a name defined twice for the same kind raises ConflictError.
/// An empty directory yields an empty library.
ProcessLibrary ParseLibrary(const std::filesystem::path& directory);

/// Merges `from` into `into`, rejecting duplicate names.
void MergeLibrary(ProcessLibrary& into, ProcessLibrary from, const std::string& source);

/// Parses the chip definition document and (optionally) the netlist document.
SystemSpec ParseSystemXml(std::string_view chips_xml, const std::string& chips_source,
                          std::optional<std::string_view> netlist_xml = std::nullopt,
                          const std::string& netlist_source = "netlist");

/// Reads and validates a system against `library`.
ValidatedSystem ParseSystem(const std::filesystem::path& chips_path,
                            const std::optional<std::filesystem::path>& netlist_path,
                            std::shared_ptr<const ProcessLibrary> library);

std::string SerializeLibrary(const ProcessLibrary& library);
std::string SerializeChips(const SystemSpec& system);
std::string SerializeNetlist(const SystemSpec& system);

/// Reads a whole file; throws ParseError if it cannot be opened.
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace chipcost
