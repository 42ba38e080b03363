#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace imac {

enum class ImpactLabel : int { others = 0, high_impact = 1 };

// Which label column a model is trained against.
enum class Task { journal_impact, article_impact };

inline int to_int(ImpactLabel l) { return static_cast<int>(l); }

inline std::string_view to_string(ImpactLabel l) {
    return l == ImpactLabel::high_impact ? "high_impact" : "others";
}

inline std::optional<ImpactLabel> parse_label(std::string_view s) {
    if (s == "high_impact") return ImpactLabel::high_impact;
    if (s == "others") return ImpactLabel::others;
    return std::nullopt;
}

inline std::string_view to_string(Task t) {
    return t == Task::journal_impact ? "journal_impact" : "article_impact";
}

inline Task parse_task(std::string_view s) {
    if (s == "journal_impact" || s == "journal") return Task::journal_impact;
    if (s == "article_impact" || s == "article") return Task::article_impact;
    throw std::invalid_argument("unknown task '" + std::string(s) +
                                "' (expected journal_impact or article_impact)");
}

}  // namespace imac
