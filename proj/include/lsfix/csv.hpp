#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lsfix/errors.hpp"
#include "lsfix/model.hpp"

namespace lsfix {

/// Instance files are one CSV per relation, <relation>.csv, with a header
/// row naming the attributes in schema order. Symbols are unquoted UTF-8,
/// integers plain decimal; values may not contain commas or newlines.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

inline void read_relation_csv(Instance& db, const RelationSchema& rs,
                              const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(file.string() + ": missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    if (header.size() != rs.attributes.size())
        throw ParseError(file.string() + ": header has " + std::to_string(header.size()) +
                         " columns, schema expects " + std::to_string(rs.attributes.size()));
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != rs.attributes[i].name)
            throw ParseError(file.string() + ": column " + std::to_string(i + 1) + " is '" +
                             header[i] + "', schema expects '" + rs.attributes[i].name + "'");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != rs.attributes.size())
            throw ParseError(file.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(rs.attributes.size()) + " fields");
        Tuple t;
        t.relation = rs.name;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (rs.attributes[i].type == AttrType::Int) {
                try {
                    t.values.emplace_back(static_cast<std::int64_t>(std::stoll(fields[i])));
                } catch (const std::exception&) {
                    throw ParseError(file.string() + ":" + std::to_string(lineno) +
                                     ": not an integer: '" + fields[i] + "'");
                }
            } else {
                t.values.emplace_back(fields[i]);
            }
        }
        try {
            db.add(std::move(t));
        } catch (const ModelError& e) {
            throw ParseError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

/// Loads <relation>.csv for every relation of the schema from `dir`.
inline Instance read_instance(const Schema& schema, const std::filesystem::path& dir) {
    Instance db(schema);
    for (const auto& rs : schema.relations)
        read_relation_csv(db, rs, dir / (rs.name + ".csv"));
    return db;
}

inline void write_instance(const Instance& db, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& rs : db.schema().relations) {
        std::ofstream out(dir / (rs.name + ".csv"));
        if (!out) throw ParseError("cannot write " + (dir / (rs.name + ".csv")).string());
        for (std::size_t i = 0; i < rs.attributes.size(); ++i)
            out << (i ? "," : "") << rs.attributes[i].name;
        out << "\n";
        for (const auto& t : db.rows(rs.name)) {
            for (std::size_t i = 0; i < t.values.size(); ++i)
                out << (i ? "," : "") << value_str(t.values[i]);
            out << "\n";
        }
    }
}

}  // namespace lsfix
