#include <cctype>
#include <cmath>
#include <cstdlib>

#include "forge/llm.hpp"

// Hand-written scanners only: judge replies are arbitrary text and the parsers
// must stay total and linear in input size.

namespace forge::llm {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (lower(s[i]) != prefix[i]) return false;
    }
    return true;
}

// Drops leading whitespace and markdown decoration (bullets, emphasis, quotes).
std::string_view strip_decoration(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && (is_space(s[i]) || s[i] == '*' || s[i] == '#' || s[i] == '-' || s[i] == '>' ||
                            s[i] == '`' || s[i] == '_' || s[i] == '[')) {
        ++i;
    }
    return s.substr(i);
}

std::string_view skip(std::string_view s, std::string_view chars) {
    std::size_t i = 0;
    while (i < s.size() && chars.find(s[i]) != std::string_view::npos) ++i;
    return s.substr(i);
}

// Parses [+-]?digits[.digits] or [+-]?.digits at the start of s.
std::optional<double> leading_number(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    const std::size_t int_begin = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    std::size_t digits = i - int_begin;
    if (i < s.size() && s[i] == '.') {
        std::size_t j = i + 1;
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j > i + 1) {
            digits += j - i - 1;
            i = j;
        }
    }
    if (digits == 0 || digits > 64) return std::nullopt;
    return std::strtod(std::string(s.substr(0, i)).c_str(), nullptr);
}

// If `line` is a score line ("Score: 87", "**Final Score**: 87.5/100"), the
// text following the colon.
std::optional<std::string_view> score_payload(std::string_view line) {
    std::string_view s = strip_decoration(line);
    for (std::string_view qualifier : {"final ", "overall ", "total "}) {
        if (starts_with_ci(s, qualifier)) {
            s = skip(s.substr(qualifier.size()), " \t");
            break;
        }
    }
    if (!starts_with_ci(s, "score")) return std::nullopt;
    s = skip(s.substr(5), " \t*]_`");
    if (s.empty() || s[0] != ':') return std::nullopt;
    return skip(s.substr(1), " \t*_`");
}

// Lowercase with every non-alphanumeric run folded to one space, padded with a
// space on both sides so whole-word search is a plain find.
std::string fold(std::string_view s) {
    std::string out = " ";
    out.reserve(s.size() + 2);
    for (char c : s) {
        if (is_alnum(c)) {
            out.push_back(lower(c));
        } else if (out.back() != ' ') {
            out.push_back(' ');
        }
    }
    if (out.back() != ' ') out.push_back(' ');
    return out;
}

struct Vocabulary {
    VerdictKind positive;
    VerdictKind negative;
    std::string_view positive_token;  // folded form with surrounding spaces
    std::string_view negative_token;
    std::string_view rationale_label;  // folded label, or empty
};

Vocabulary vocabulary(VerdictFamily family) {
    switch (family) {
        case VerdictFamily::CodeQuality:
            return {VerdictKind::Qualified, VerdictKind::Disqualified, " qualified ", " disqualified ", "rationale"};
        case VerdictFamily::ImageQuality:
            return {VerdictKind::Pass, VerdictKind::Fail, " pass ", " fail ", ""};
        case VerdictFamily::Consistency:
            return {VerdictKind::SufficientMatch, VerdictKind::FundamentalMismatch, " sufficient match ",
                    " fundamental mismatch ", "reason"};
    }
    throw Error(ErrorKind::PreconditionViolation, "unknown verdict family");
}

// 0: neither token, 1: positive only, 2: negative only, 3: both.
int tokens_in(const std::string& folded, const Vocabulary& v) {
    int mask = 0;
    if (folded.find(v.positive_token) != std::string::npos) mask |= 1;
    if (folded.find(v.negative_token) != std::string::npos) mask |= 2;
    return mask;
}

std::string join_from(const std::vector<std::string>& lines, std::size_t first, std::string_view head) {
    std::string out(head);
    for (std::size_t i = first; i < lines.size(); ++i) {
        if (!out.empty()) out.push_back('\n');
        out += lines[i];
    }
    return trim(out);
}

// Labelled dimension scores anywhere in a line: "[Suitability Score]: 4" ->
// {"suitability", 4}. The bare (final) score is not a subscore.
void collect_subscores(std::string_view line, std::map<std::string, double>& out) {
    for (std::size_t p = 0; p + 5 <= line.size(); ++p) {
        if (!starts_with_ci(line.substr(p), "score")) continue;
        if (p + 5 < line.size() && is_alnum(line[p + 5])) continue;
        std::string_view after = skip(line.substr(p + 5), " \t]*_`");
        if (after.empty() || after[0] != ':') continue;
        auto value = leading_number(skip(after.substr(1), " \t*_`["));
        if (!value) continue;
        std::size_t b = p;
        while (b > 0 && (std::isalpha(static_cast<unsigned char>(line[b - 1])) || line[b - 1] == ' ' ||
                         line[b - 1] == '-' || line[b - 1] == '_' || line[b - 1] == '*')) {
            --b;
        }
        std::vector<std::string> words;
        std::string word;
        for (char c : fold(line.substr(b, p - b))) {
            if (c == ' ') {
                if (!word.empty()) words.push_back(std::move(word));
                word.clear();
            } else {
                word.push_back(c);
            }
        }
        if (words.empty()) continue;
        if (words.size() > 3) words.erase(words.begin(), words.end() - 3);
        if (words.size() == 1 && (words[0] == "final" || words[0] == "overall" || words[0] == "total")) continue;
        std::string key;
        for (const auto& w : words) key += (key.empty() ? "" : "_") + w;
        out[key] = *value;
    }
}

}  // namespace

std::string_view to_string(VerdictKind kind) {
    switch (kind) {
        case VerdictKind::Qualified: return "Qualified";
        case VerdictKind::Disqualified: return "Disqualified";
        case VerdictKind::Pass: return "Pass";
        case VerdictKind::Fail: return "Fail";
        case VerdictKind::SufficientMatch: return "SufficientMatch";
        case VerdictKind::FundamentalMismatch: return "FundamentalMismatch";
    }
    return "Unknown";
}

std::string_view to_string(VerdictFamily family) {
    switch (family) {
        case VerdictFamily::CodeQuality: return "CodeQuality";
        case VerdictFamily::ImageQuality: return "ImageQuality";
        case VerdictFamily::Consistency: return "Consistency";
    }
    return "Unknown";
}

VerdictKind verdict_kind_from_string(std::string_view name) {
    for (auto k : {VerdictKind::Qualified, VerdictKind::Disqualified, VerdictKind::Pass, VerdictKind::Fail,
                   VerdictKind::SufficientMatch, VerdictKind::FundamentalMismatch}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorKind::SchemaError, "unknown verdict kind: " + std::string(name));
}

json to_json(const JudgeVerdict& v) {
    json j = {{"kind", to_string(v.kind)}, {"rationale", v.rationale}};
    if (!v.subscores.empty()) j["subscores"] = v.subscores;
    return j;
}

double parse_score(std::string_view response) {
    const auto lines = split_lines(response);
    bool saw_label = false;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        auto payload = score_payload(*it);
        if (!payload) continue;
        saw_label = true;
        auto value = leading_number(*payload);
        if (!value) continue;  // e.g. the rubric's own "Score: ${...}" placeholder
        if (!std::isfinite(*value) || *value < 0.0 || *value > 100.0) {
            throw Error(ErrorKind::OutOfRange, "score " + std::string(trim(*payload)) + " outside [0,100]");
        }
        return *value;
    }
    throw Error(ErrorKind::ParseFailure, saw_label ? "score line has no number" : "no Score: line");
}

JudgeVerdict parse_verdict(std::string_view response, VerdictFamily family) {
    const Vocabulary vocab = vocabulary(family);
    const auto lines = split_lines(response);

    std::optional<std::size_t> verdict_line;
    int mask = 0;
    // Prefer the last line that is labelled as a verdict and names one token.
    for (std::size_t i = lines.size(); i-- > 0;) {
        const std::string folded = fold(lines[i]);
        if (folded.find(" verdict ") == std::string::npos) continue;
        const int m = tokens_in(folded, vocab);
        if (m == 1 || m == 2) {
            verdict_line = i;
            mask = m;
            break;
        }
    }
    if (!verdict_line) {
        int seen = 0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const int m = tokens_in(fold(lines[i]), vocab);
            if (m != 0) last = i;
            seen |= m;
        }
        if (seen != 1 && seen != 2) {
            throw Error(ErrorKind::ParseFailure,
                        seen == 0 ? "no " + std::string(to_string(family)) + " verdict token"
                                  : "ambiguous " + std::string(to_string(family)) + " verdict");
        }
        verdict_line = last;
        mask = seen;
    }

    JudgeVerdict v;
    v.kind = mask == 1 ? vocab.positive : vocab.negative;

    std::optional<std::size_t> label_line;
    if (!vocab.rationale_label.empty()) {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const std::string head = fold(strip_decoration(lines[i]));
            if (head.compare(1, vocab.rationale_label.size(), vocab.rationale_label) == 0 &&
                head.size() > vocab.rationale_label.size() + 1 && head[vocab.rationale_label.size() + 1] == ' ') {
                label_line = i;
            }
        }
    }
    if (label_line) {
        std::string_view l = lines[*label_line];
        const std::size_t colon = l.find(':');
        std::string_view head = colon == std::string_view::npos ? std::string_view{} : l.substr(colon + 1);
        v.rationale = join_from(lines, *label_line + 1, trim(head));
    } else {
        v.rationale = join_from(lines, *verdict_line + 1, "");
    }
    if (v.rationale.empty() && !v.positive()) v.rationale = trim(response);

    for (const auto& line : lines) collect_subscores(line, v.subscores);
    return v;
}

}  // namespace forge::llm
