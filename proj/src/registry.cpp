#include "ncc/registry.hpp"

#include "ncc/error.hpp"

namespace ncc {

std::string_view to_string(RegistryKind kind) {
  switch (kind) {
    case RegistryKind::task: return "task";
    case RegistryKind::model: return "model";
    case RegistryKind::tokenizer: return "tokenizer";
    case RegistryKind::metric: return "metric";
  }
  return "unknown";
}

bool is_valid_registry_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

void Registry::add(RegistryKind kind, std::string name, std::any factory, std::string description) {
  if (!is_valid_registry_name(name)) {
    throw Error(ErrorCode::InvalidName,
                std::string(to_string(kind)) + " name '" + name + "' must match [a-z0-9_]+");
  }
  if (find(kind, name) != nullptr) {
    throw Error(ErrorCode::DuplicateName,
                "cannot register duplicate " + std::string(to_string(kind)) + " '" + name + "'");
  }
  entries_.push_back({kind, std::move(name), std::move(factory), std::move(description)});
}

const RegistryEntry* Registry::find(RegistryKind kind, std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.kind == kind && e.name == name) return &e;
  }
  return nullptr;
}

const std::any& Registry::resolve(RegistryKind kind, std::string_view name) const {
  if (const auto* e = find(kind, name)) return e->factory;
  std::string available;
  for (const auto& n : names(kind)) {
    if (!available.empty()) available += ", ";
    available += n;
  }
  throw Error(ErrorCode::UnknownName, "unknown " + std::string(to_string(kind)) + " '" +
                                          std::string(name) + "'; available: [" + available + "]");
}

bool Registry::contains(RegistryKind kind, std::string_view name) const {
  return find(kind, name) != nullptr;
}

std::vector<const RegistryEntry*> Registry::list(RegistryKind kind) const {
  std::vector<const RegistryEntry*> out;
  for (const auto& e : entries_) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

std::vector<std::string> Registry::names(RegistryKind kind) const {
  std::vector<std::string> out;
  for (const auto* e : list(kind)) out.push_back(e->name);
  return out;
}

Registry& global_registry() {
  static Registry registry;
  return registry;
}

}  // namespace ncc
