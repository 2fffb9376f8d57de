#include "ptsim/eventlog.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "ptsim/error.hpp"

namespace ptsim {
namespace {

// RFC 4180 record reader: quoted fields may contain commas, doubled quotes and
// line breaks. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  ++line;
  const std::size_t record_line = line;
  for (;;) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) {
        throw Error(ErrorCode::MalformedCsv, "unterminated quoted field",
                    "row " + std::to_string(record_line));
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '\r') {
      // tolerated before \n
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
  }
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (const char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

std::optional<std::size_t> column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

ActivitySequence Trace::activities() const {
  ActivitySequence out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.activity);
  return out;
}

EventLog::EventLog(std::vector<Trace> traces) : traces_(std::move(traces)) {
  std::set<std::string> case_ids;
  for (auto& trace : traces_) {
    if (trace.events.empty()) {
      throw Error(ErrorCode::InvalidArgument, "trace has no events", trace.case_id);
    }
    if (!case_ids.insert(trace.case_id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate case id", trace.case_id);
    }
    for (const auto& e : trace.events) {
      if (e.case_id != trace.case_id) {
        throw Error(ErrorCode::InvalidArgument, "event belongs to another case", e.case_id);
      }
      if (e.activity.empty()) {
        throw Error(ErrorCode::InvalidArgument, "event without activity", trace.case_id);
      }
      if (e.end_time < e.start_time) {
        throw Error(ErrorCode::NegativeDuration, "event ends before it starts",
                    trace.case_id + "/" + e.activity);
      }
    }
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) { return a.end_time < b.end_time; });
    for (const auto& e : trace.events) {
      alphabet_.insert(e.activity);
      if (e.resource) resources_.insert(*e.resource);
      if (!span_) {
        span_ = {e.start_time, e.end_time};
      } else {
        span_->first = std::min(span_->first, e.start_time);
        span_->second = std::max(span_->second, e.end_time);
      }
    }
  }
}

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const auto& t : traces_) n += t.events.size();
  return n;
}

EventLog parse_csv(std::istream& in, const ColumnMapping& mapping) {
  std::vector<std::string> header;
  std::size_t line = 0;
  if (!read_record(in, header, line)) {
    throw Error(ErrorCode::MissingColumn, "input has no header row", mapping.case_id);
  }
  if (!header.empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

  auto require = [&](const std::string& name) {
    const auto idx = column_index(header, name);
    if (!idx) throw Error(ErrorCode::MissingColumn, "mapped column not found in header", name);
    return *idx;
  };
  const std::size_t case_col = require(mapping.case_id);
  const std::size_t act_col = require(mapping.activity);
  const std::size_t end_col = require(mapping.end_time);
  const auto start_col = mapping.start_time ? column_index(header, *mapping.start_time) : std::nullopt;
  const auto res_col = mapping.resource ? column_index(header, *mapping.resource) : std::nullopt;

  std::vector<Trace> traces;
  std::unordered_map<std::string, std::size_t> trace_of_case;
  std::vector<std::string> row;
  while (read_record(in, row, line)) {
    if (row.size() == 1 && row.front().empty()) continue;  // blank line
    const std::string where = "row " + std::to_string(line);
    if (row.size() != header.size()) {
      throw Error(ErrorCode::MalformedCsv, "field count differs from header", where);
    }
    Event e;
    e.case_id = row[case_col];
    e.activity = row[act_col];
    if (e.case_id.empty()) throw Error(ErrorCode::MalformedCsv, "empty case id", where);
    if (e.activity.empty()) throw Error(ErrorCode::MalformedCsv, "empty activity", where);
    const auto end = parse_timestamp(row[end_col]);
    if (!end) {
      throw Error(ErrorCode::BadTimestamp, "unparseable completion timestamp",
                  where + ": '" + row[end_col] + "'");
    }
    e.end_time = *end;
    e.start_time = *end;
    if (start_col && !row[*start_col].empty()) {
      const auto start = parse_timestamp(row[*start_col]);
      if (!start) {
        throw Error(ErrorCode::BadTimestamp, "unparseable start timestamp",
                    where + ": '" + row[*start_col] + "'");
      }
      e.start_time = *start;
    }
    if (e.end_time < e.start_time) {
      throw Error(ErrorCode::NegativeDuration, "event ends before it starts", where);
    }
    if (res_col && !row[*res_col].empty()) e.resource = row[*res_col];

    auto [it, inserted] = trace_of_case.try_emplace(e.case_id, traces.size());
    if (inserted) traces.push_back(Trace{e.case_id, {}});
    traces[it->second].events.push_back(std::move(e));
  }
  return EventLog(std::move(traces));
}

EventLog parse_csv_string(const std::string& text, const ColumnMapping& mapping) {
  std::istringstream in(text);
  return parse_csv(in, mapping);
}

void write_csv(const EventLog& log, std::ostream& out) {
  out << kCanonicalHeader << '\n';
  for (const auto& trace : log.traces()) {
    for (const auto& e : trace.events) {
      write_field(out, e.case_id);
      out << ',';
      write_field(out, e.activity);
      out << ',' << format_timestamp(e.start_time) << ',' << format_timestamp(e.end_time) << ',';
      if (e.resource) write_field(out, *e.resource);
      out << '\n';
    }
  }
}

std::string write_csv_string(const EventLog& log) {
  std::ostringstream out;
  write_csv(log, out);
  return out.str();
}

std::vector<Variant> variants(const EventLog& log) {
  std::map<ActivitySequence, std::size_t> tally;
  for (const auto& t : log.traces()) ++tally[t.activities()];
  std::vector<Variant> out;
  out.reserve(tally.size());
  for (auto& [seq, n] : tally) out.push_back(Variant{seq, n});
  return out;
}

DirectlyFollows DirectlyFollows::from_variants(const std::vector<Variant>& vs) {
  DirectlyFollows g;
  for (const auto& v : vs) {
    if (v.sequence.empty()) continue;
    g.starts[v.sequence.front()] += v.count;
    g.ends[v.sequence.back()] += v.count;
    for (std::size_t i = 0; i + 1 < v.sequence.size(); ++i) {
      g.edges[{v.sequence[i], v.sequence[i + 1]}] += v.count;
    }
  }
  return g;
}

std::size_t DirectlyFollows::edge_total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : edges) n += c;
  return n;
}

DirectlyFollows dfg(const EventLog& log) { return DirectlyFollows::from_variants(variants(log)); }

}  // namespace ptsim
