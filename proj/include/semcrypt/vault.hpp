#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcrypt/crypto.hpp"
#include "semcrypt/error.hpp"

// Encrypted-object store with ordered access rules and a hash-chained audit
// log.  Everything lives under one directory: objects/<id>.semc, policy.json,
// audit.log (one JSON object per line), and a .lock file that serializes
// writers across processes.  Principals are asserted by the caller; there is
// no authentication layer, the store simulates access management.

namespace semcrypt::vault {

enum class Action : uint8_t { Read = 0, Write = 1, Decrypt = 2 };
enum class Effect : uint8_t { Allow = 0, Deny = 1 };

const char* action_name(Action a);
Action action_from_name(const std::string& name);
const char* effect_name(Effect e);
Effect effect_from_name(const std::string& name);

// principal is an exact name or "*"; resource is a glob over object ids where
// '*' matches any run of characters and everything else is literal.
struct PolicyRule {
  std::string principal;
  Action action = Action::Read;
  std::string resource;
  Effect effect = Effect::Deny;
};

bool glob_match(const std::string& pattern, const std::string& text);

// First matching rule wins; an empty or exhausted list denies.
Effect evaluate_policy(const std::vector<PolicyRule>& rules, const std::string& principal,
                       Action action, const std::string& resource);

std::vector<PolicyRule> load_policy(const std::filesystem::path& file);
void save_policy(const std::filesystem::path& file, const std::vector<PolicyRule>& rules);

struct AuditEntry {
  uint64_t seq = 0;
  int64_t timestamp = 0;  // unix seconds
  std::string principal;
  Action action = Action::Read;
  std::string resource;
  Effect decision = Effect::Deny;
  crypto::Digest prev_hash{};   // 32 zero bytes for the genesis entry
  crypto::Digest entry_hash{};  // SHA-256(prev_hash || canonical fields)
};

// Digest over prev_hash followed by the length-prefixed canonical field
// serialization; entry_hash itself is excluded.
crypto::Digest entry_digest(const AuditEntry& e);

std::string audit_line(const AuditEntry& e);
AuditEntry parse_audit_line(const std::string& line);  // CorruptPayload on damage

struct AuditVerdict {
  bool ok = true;
  size_t first_bad = 0;  // index of the first broken entry when !ok
};

// Recomputes every hash, checks seq contiguity from 0, the all-zero genesis
// prev_hash, and each link to the previous entry_hash.
AuditVerdict verify_audit_chain(const std::vector<AuditEntry>& log);

struct Clock {
  virtual ~Clock() = default;
  virtual int64_t now_unix() const = 0;
};

struct SystemClock : Clock {
  int64_t now_unix() const override;
};

struct FixedClock : Clock {
  int64_t t = 0;
  explicit FixedClock(int64_t t_ = 0) : t(t_) {}
  int64_t now_unix() const override { return t; }
};

class Vault {
 public:
  // Creates the directory layout if needed and loads policy.json when present.
  Vault(std::filesystem::path dir, const Clock& clock);

  // Both operations append an audit entry recording the policy decision
  // before acting on it, whatever the outcome.
  void put(const std::string& id, const std::vector<uint8_t>& bytes,
           const std::string& principal);
  std::vector<uint8_t> get(const std::string& id, const std::string& principal);

  std::vector<AuditEntry> read_audit() const;
  // File-level verification: an unparseable line counts as the first bad index.
  AuditVerdict verify_audit() const;

  const std::vector<PolicyRule>& rules() const { return rules_; }
  void set_rules(std::vector<PolicyRule> rules);  // in-memory only
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path object_path(const std::string& id) const;
  void append_audit(const std::string& principal, Action action, const std::string& resource,
                    Effect decision);

  std::filesystem::path dir_;
  const Clock* clock_;
  std::vector<PolicyRule> rules_;
};

}  // namespace semcrypt::vault
