#include "tripmine/store.hpp"

#include <fstream>
#include <sstream>

#include "tripmine/codec.hpp"
#include "tripmine/error.hpp"

namespace tripmine {

namespace {

constexpr std::string_view kStageNames[] = {"Received", "Segmented", "Classified", "Enriched",
                                            "Failed"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write file", tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write", tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot replace file", path.string());
}

template <typename T>
std::shared_ptr<const T> load_or_empty(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::make_shared<const T>();
  try {
    return std::make_shared<const T>(json::parse(read_file(path)).get<T>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "corrupt store file", path.string() + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(JobStage stage) { return kStageNames[static_cast<int>(stage)]; }

std::optional<JobStage> job_stage_from_string(std::string_view text) {
  for (int i = 0; i < 5; ++i) {
    if (kStageNames[i] == text) return static_cast<JobStage>(i);
  }
  return std::nullopt;
}

Store::Store()
    : data_(std::make_shared<const StoreData>()), vault_(std::make_shared<const VaultData>()) {}

Store::Store(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(*directory_, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create store directory", directory_->string());
  data_ = load_or_empty<StoreData>(*directory_ / "store.json");
  vault_ = load_or_empty<VaultData>(*directory_ / "vault.json");
}

StoreSnapshot Store::snapshot() const {
  std::lock_guard lock(read_mutex_);
  return data_;
}

VaultSnapshot Store::vault_snapshot() const {
  std::lock_guard lock(read_mutex_);
  return vault_;
}

void Store::publish(std::shared_ptr<StoreData> data, std::shared_ptr<VaultData> vault) {
  if (directory_) {
    write_atomically(*directory_ / "store.json", json(*data).dump());
    write_atomically(*directory_ / "vault.json", json(*vault).dump());
  }
  std::lock_guard lock(read_mutex_);
  data_ = std::move(data);
  vault_ = std::move(vault);
}

std::string Store::serialize_data() const { return json(*snapshot()).dump(); }

std::string Store::serialize_vault() const { return json(*vault_snapshot()).dump(); }

std::string receipt_key(const Pseudonym& p, std::string_view client_message_id) {
  std::string key = p.value();
  key += '/';
  key += client_message_id;
  return key;
}

}  // namespace tripmine
