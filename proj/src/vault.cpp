#include "semcrypt/vault.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace semcrypt::vault {

using nlohmann::json;

const char* action_name(Action a) {
  switch (a) {
    case Action::Read: return "read";
    case Action::Write: return "write";
    case Action::Decrypt: return "decrypt";
  }
  return "?";
}

Action action_from_name(const std::string& name) {
  if (name == "read") return Action::Read;
  if (name == "write") return Action::Write;
  if (name == "decrypt") return Action::Decrypt;
  throw Error(Err::CorruptPayload, "unknown action '" + name + "'");
}

const char* effect_name(Effect e) { return e == Effect::Allow ? "allow" : "deny"; }

Effect effect_from_name(const std::string& name) {
  if (name == "allow") return Effect::Allow;
  if (name == "deny") return Effect::Deny;
  throw Error(Err::CorruptPayload, "unknown effect '" + name + "'");
}

bool glob_match(const std::string& pattern, const std::string& text) {
  size_t p = 0, t = 0;
  size_t star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string::npos) {
      // backtrack: let the last star swallow one more character
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

Effect evaluate_policy(const std::vector<PolicyRule>& rules, const std::string& principal,
                       Action action, const std::string& resource) {
  for (const auto& r : rules) {
    if (r.principal != "*" && r.principal != principal) continue;
    if (r.action != action) continue;
    if (!glob_match(r.resource, resource)) continue;
    return r.effect;
  }
  return Effect::Deny;
}

std::vector<PolicyRule> load_policy(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(in.good(), Err::IoError, "cannot open policy file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Err::CorruptPayload, "policy file is not valid JSON: " + std::string(e.what()));
  }
  std::vector<PolicyRule> rules;
  try {
    for (const auto& jr : doc.at("rules")) {
      PolicyRule r;
      r.principal = jr.at("principal").get<std::string>();
      r.action = action_from_name(jr.at("action").get<std::string>());
      r.resource = jr.at("resource").get<std::string>();
      r.effect = effect_from_name(jr.at("effect").get<std::string>());
      rules.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(Err::CorruptPayload, "policy rule is malformed: " + std::string(e.what()));
  }
  return rules;
}

void save_policy(const std::filesystem::path& file, const std::vector<PolicyRule>& rules) {
  json doc;
  doc["rules"] = json::array();
  for (const auto& r : rules) {
    doc["rules"].push_back({{"principal", r.principal},
                            {"action", action_name(r.action)},
                            {"resource", r.resource},
                            {"effect", effect_name(r.effect)}});
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  require(out.good(), Err::IoError, "cannot write policy file " + file.string());
  out << doc.dump(2) << '\n';
  require(out.good(), Err::IoError, "failed writing policy file " + file.string());
}

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_str(std::vector<uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::string hex_encode(const crypto::Digest& d) {
  static const char* k = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (uint8_t b : d) {
    s.push_back(k[b >> 4]);
    s.push_back(k[b & 15]);
  }
  return s;
}

crypto::Digest hex_decode(const std::string& s) {
  require(s.size() == 64, Err::CorruptPayload, "hash field must be 64 hex digits");
  crypto::Digest d{};
  for (size_t i = 0; i < 32; ++i) {
    auto nib = [&](char c) -> uint8_t {
      if (c >= '0' && c <= '9') return static_cast<uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<uint8_t>(c - 'a' + 10);
      throw Error(Err::CorruptPayload, "hash field holds a non-hex character");
    };
    d[i] = static_cast<uint8_t>(nib(s[2 * i]) << 4 | nib(s[2 * i + 1]));
  }
  return d;
}

// Advisory exclusive lock, released on scope exit.  Serializes object writes
// and audit appends across processes; readers do not take it.
class WriterLock {
 public:
  explicit WriterLock(const std::filesystem::path& p) {
    fd_ = ::open(p.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    require(fd_ >= 0, Err::IoError, "cannot open lock file " + p.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(Err::IoError, "cannot lock " + p.string());
    }
  }
  ~WriterLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WriterLock(const WriterLock&) = delete;
  WriterLock& operator=(const WriterLock&) = delete;

 private:
  int fd_;
};

// Object ids become file names, so only a conservative charset is accepted.
void require_valid_id(const std::string& id) {
  require(!id.empty() && id.size() <= 200, Err::UsageError, "object id must be 1..200 chars");
  require(id[0] != '.', Err::UsageError, "object id must not start with '.'");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    require(ok, Err::UsageError, "object id may use only [A-Za-z0-9._-]");
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::vector<std::string> lines;
  std::ifstream in(file, std::ios::binary);
  if (!in.good()) return lines;  // no log yet
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

crypto::Digest entry_digest(const AuditEntry& e) {
  std::vector<uint8_t> buf(e.prev_hash.begin(), e.prev_hash.end());
  put_u64(buf, e.seq);
  put_u64(buf, static_cast<uint64_t>(e.timestamp));
  put_str(buf, e.principal);
  put_str(buf, action_name(e.action));
  put_str(buf, e.resource);
  put_str(buf, effect_name(e.decision));
  return crypto::sha256(buf);
}

std::string audit_line(const AuditEntry& e) {
  json j{{"seq", e.seq},
         {"timestamp", e.timestamp},
         {"principal", e.principal},
         {"action", action_name(e.action)},
         {"resource", e.resource},
         {"decision", effect_name(e.decision)},
         {"prev_hash", hex_encode(e.prev_hash)},
         {"entry_hash", hex_encode(e.entry_hash)}};
  return j.dump();
}

AuditEntry parse_audit_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Err::CorruptPayload, "audit line is not valid JSON: " + std::string(e.what()));
  }
  AuditEntry e;
  try {
    e.seq = j.at("seq").get<uint64_t>();
    e.timestamp = j.at("timestamp").get<int64_t>();
    e.principal = j.at("principal").get<std::string>();
    e.action = action_from_name(j.at("action").get<std::string>());
    e.resource = j.at("resource").get<std::string>();
    e.decision = effect_from_name(j.at("decision").get<std::string>());
    e.prev_hash = hex_decode(j.at("prev_hash").get<std::string>());
    e.entry_hash = hex_decode(j.at("entry_hash").get<std::string>());
  } catch (const json::exception& ex) {
    throw Error(Err::CorruptPayload, "audit line is malformed: " + std::string(ex.what()));
  }
  return e;
}

AuditVerdict verify_audit_chain(const std::vector<AuditEntry>& log) {
  crypto::Digest expect_prev{};  // genesis: 32 zero bytes
  for (size_t i = 0; i < log.size(); ++i) {
    const AuditEntry& e = log[i];
    if (e.seq != i) return {false, i};
    if (e.prev_hash != expect_prev) return {false, i};
    if (e.entry_hash != entry_digest(e)) return {false, i};
    expect_prev = e.entry_hash;
  }
  return {true, 0};
}

int64_t SystemClock::now_unix() const {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Vault::Vault(std::filesystem::path dir, const Clock& clock)
    : dir_(std::move(dir)), clock_(&clock) {
  std::error_code ec;
  std::filesystem::create_directories(dir_ / "objects", ec);
  require(!ec, Err::IoError, "cannot create vault directory " + dir_.string());
  const auto policy = dir_ / "policy.json";
  if (std::filesystem::exists(policy)) rules_ = load_policy(policy);
}

void Vault::set_rules(std::vector<PolicyRule> rules) { rules_ = std::move(rules); }

std::filesystem::path Vault::object_path(const std::string& id) const {
  return dir_ / "objects" / (id + ".semc");
}

void Vault::append_audit(const std::string& principal, Action action, const std::string& resource,
                         Effect decision) {
  // caller holds the writer lock
  AuditEntry e;
  e.timestamp = clock_->now_unix();
  e.principal = principal;
  e.action = action;
  e.resource = resource;
  e.decision = decision;
  const auto lines = read_lines(dir_ / "audit.log");
  if (!lines.empty()) {
    const AuditEntry last = parse_audit_line(lines.back());
    e.seq = last.seq + 1;
    e.prev_hash = last.entry_hash;
  }
  e.entry_hash = entry_digest(e);
  std::ofstream out(dir_ / "audit.log", std::ios::binary | std::ios::app);
  require(out.good(), Err::IoError, "cannot open audit log for append");
  out << audit_line(e) << '\n';
  out.flush();
  require(out.good(), Err::IoError, "failed appending to audit log");
}

void Vault::put(const std::string& id, const std::vector<uint8_t>& bytes,
                const std::string& principal) {
  require_valid_id(id);
  const Effect decision = evaluate_policy(rules_, principal, Action::Write, id);
  WriterLock lock(dir_ / ".lock");
  append_audit(principal, Action::Write, id, decision);
  require(decision == Effect::Allow, Err::AccessDenied,
          principal + " may not write '" + id + "'");
  const auto path = object_path(id);
  require(!std::filesystem::exists(path), Err::IdCollision, "object '" + id + "' already exists");
  const auto tmp = dir_ / "objects" / (id + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), Err::IoError, "cannot write object file");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(out.good(), Err::IoError, "failed writing object file");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, Err::IoError, "cannot finalize object file");
}

std::vector<uint8_t> Vault::get(const std::string& id, const std::string& principal) {
  require_valid_id(id);
  const Effect decision = evaluate_policy(rules_, principal, Action::Read, id);
  {
    WriterLock lock(dir_ / ".lock");
    append_audit(principal, Action::Read, id, decision);
  }
  require(decision == Effect::Allow, Err::AccessDenied,
          principal + " may not read '" + id + "'");
  const auto path = object_path(id);
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::NotFound, "no object '" + id + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  require(in.eof() || in.good(), Err::IoError, "failed reading object file");
  return bytes;
}

std::vector<AuditEntry> Vault::read_audit() const {
  std::vector<AuditEntry> log;
  for (const auto& line : read_lines(dir_ / "audit.log")) log.push_back(parse_audit_line(line));
  return log;
}

AuditVerdict Vault::verify_audit() const {
  const auto lines = read_lines(dir_ / "audit.log");
  std::vector<AuditEntry> log;
  log.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      log.push_back(parse_audit_line(lines[i]));
    } catch (const Error&) {
      return {false, i};
    }
  }
  return verify_audit_chain(log);
}

}  // namespace semcrypt::vault
