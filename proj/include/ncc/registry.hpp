#pragma once

#include <any>
#include <string>
#include <string_view>
#include <vector>

namespace ncc {

enum class RegistryKind { task, model, tokenizer, metric };

std::string_view to_string(RegistryKind kind);

struct RegistryEntry {
  RegistryKind kind;
  std::string name;
  std::any factory;
  std::string description;
};

/// Name -> factory tables, one independent namespace per RegistryKind.
///
/// Populated during start-up (see install_builtins) and read-only afterwards,
/// so concurrent resolve() calls need no locking. Factories are stored
/// type-erased; each kind has a conventional factory type declared next to
/// the interface it builds (TaskFactory, ModelFactory, ...).
class Registry {
 public:
  /// Throws DuplicateName when (kind, name) exists, InvalidName unless the
  /// name matches [a-z0-9_]+.
  void add(RegistryKind kind, std::string name, std::any factory, std::string description = {});

  /// Throws UnknownName; the message lists every registered name of that kind.
  const std::any& resolve(RegistryKind kind, std::string_view name) const;

  template <class Factory>
  const Factory& resolve_as(RegistryKind kind, std::string_view name) const {
    return std::any_cast<const Factory&>(resolve(kind, name));
  }

  bool contains(RegistryKind kind, std::string_view name) const;

  /// Entries of one kind in registration order.
  std::vector<const RegistryEntry*> list(RegistryKind kind) const;
  std::vector<std::string> names(RegistryKind kind) const;

 private:
  const RegistryEntry* find(RegistryKind kind, std::string_view name) const;

  std::vector<RegistryEntry> entries_;
};

bool is_valid_registry_name(std::string_view name);

/// The process-wide registry used by the CLI, server and trainer.
Registry& global_registry();

/// Registers the built-in tasks, models, tokenizers and metrics into the
/// global registry. Safe to call more than once; only the first call
/// registers anything.
void install_builtins();

}  // namespace ncc
