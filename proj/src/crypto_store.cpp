#include "adseal/crypto_store.hpp"

#include <sys/stat.h>

#include <cstdio>
#include <mutex>

#include <sodium.h>

#include "adseal/errors.hpp"
#include "adseal/io_util.hpp"

namespace adseal {

namespace {

void require_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw CryptoError("libsodium initialization failed");
  });
}

std::string hex(const unsigned char* bytes, size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0xf]);
  }
  return out;
}

int64_t bucket_start_hour(TimeOfDay t) {
  switch (t) {
    case TimeOfDay::Morning: return 6;
    case TimeOfDay::Afternoon: return 12;
    case TimeOfDay::Evening: return 18;
    case TimeOfDay::Night: return 22;
  }
  return 0;
}

}  // namespace

SecretKey generate_key() {
  require_sodium();
  SecretKey key{};
  randombytes_buf(key.data(), key.size());
  return key;
}

std::string key_fingerprint(const SecretKey& key) {
  require_sodium();
  unsigned char out[8];
  crypto_generichash(out, sizeof(out), key.data(), key.size(), nullptr, 0);
  return hex(out, sizeof(out));
}

void save_key_file(const SecretKey& key, const std::string& path) {
  write_file_bytes(path, std::vector<unsigned char>(key.begin(), key.end()));
  if (chmod(path.c_str(), S_IRUSR | S_IWUSR) != 0) {
    throw CryptoError("cannot restrict permissions on key file " + path);
  }
}

SecretKey load_key_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() != 32) {
    throw CryptoError("key file " + path + " must hold exactly 32 bytes, found " +
                      std::to_string(bytes.size()));
  }
  SecretKey key{};
  std::copy(bytes.begin(), bytes.end(), key.begin());
  return key;
}

EncryptedStore encrypt_store(const std::vector<unsigned char>& plaintext,
                             const SecretKey& key) {
  require_sodium();
  static_assert(crypto_secretbox_NONCEBYTES == 24 && crypto_secretbox_MACBYTES == 16);
  EncryptedStore store;
  store.key_id = key_fingerprint(key);
  randombytes_buf(store.nonce.data(), store.nonce.size());
  store.ciphertext.resize(plaintext.size());
  crypto_secretbox_detached(store.ciphertext.data(), store.tag.data(), plaintext.data(),
                            plaintext.size(), store.nonce.data(), key.data());
  return store;
}

std::vector<unsigned char> decrypt_store(const EncryptedStore& store, const SecretKey& key) {
  require_sodium();
  if (store.key_id != key_fingerprint(key)) {
    throw CryptoError("decrypt: key fingerprint mismatch (store " + store.key_id + ")");
  }
  std::vector<unsigned char> plaintext(store.ciphertext.size());
  if (crypto_secretbox_open_detached(plaintext.data(), store.ciphertext.data(),
                                     store.tag.data(), store.ciphertext.size(),
                                     store.nonce.data(), key.data()) != 0) {
    throw CryptoError("decrypt: authentication failed (tampered data or wrong key)");
  }
  return plaintext;
}

void save_encrypted_store(const EncryptedStore& store, const std::string& path) {
  std::vector<unsigned char> out;
  out.insert(out.end(), store.key_id.begin(), store.key_id.end());  // 16 hex chars
  out.insert(out.end(), store.nonce.begin(), store.nonce.end());
  out.insert(out.end(), store.tag.begin(), store.tag.end());
  out.insert(out.end(), store.ciphertext.begin(), store.ciphertext.end());
  write_file_bytes(path, out);
}

EncryptedStore load_encrypted_store(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const size_t header = 16 + 24 + 16;
  if (bytes.size() < header) throw CryptoError("encrypted store " + path + " is truncated");
  EncryptedStore store;
  store.key_id.assign(bytes.begin(), bytes.begin() + 16);
  std::copy(bytes.begin() + 16, bytes.begin() + 40, store.nonce.begin());
  std::copy(bytes.begin() + 40, bytes.begin() + 56, store.tag.begin());
  store.ciphertext.assign(bytes.begin() + 56, bytes.end());
  return store;
}

std::string pseudonymize(const std::string& user_id, const SecretKey& key) {
  require_sodium();
  unsigned char out[8];
  crypto_generichash(out, sizeof(out),
                     reinterpret_cast<const unsigned char*>(user_id.data()), user_id.size(),
                     key.data(), key.size());
  return hex(out, sizeof(out));
}

std::vector<ImpressionEvent> anonymize(const std::vector<ImpressionEvent>& events,
                                       const SecretKey& key) {
  std::vector<ImpressionEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    ImpressionEvent a = e;
    a.user_id = pseudonymize(e.user_id, key);
    const int64_t day = e.ts >= 0 ? e.ts / 86400 : (e.ts - 86399) / 86400;
    a.ts = day * 86400 + bucket_start_hour(e.time_of_day) * 3600;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace adseal
