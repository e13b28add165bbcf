#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "adseal/events.hpp"

namespace adseal {

using SecretKey = std::array<unsigned char, 32>;

// Authenticated encryption of the local profile store (XSalsa20-Poly1305).
struct EncryptedStore {
  std::vector<unsigned char> ciphertext;
  std::array<unsigned char, 24> nonce{};
  std::array<unsigned char, 16> tag{};  // Poly1305 authentication tag
  std::string key_id;                   // 8-byte BLAKE2b fingerprint, hex
};

SecretKey generate_key();
std::string key_fingerprint(const SecretKey& key);

// Key file holds exactly 32 raw bytes, mode 0600.
void save_key_file(const SecretKey& key, const std::string& path);
SecretKey load_key_file(const std::string& path);

// Fresh random nonce per call: encrypting the same plaintext twice yields
// different ciphertexts.
EncryptedStore encrypt_store(const std::vector<unsigned char>& plaintext,
                             const SecretKey& key);

// Throws CryptoError on a wrong key or any ciphertext/tag tampering; never
// returns garbage plaintext.
std::vector<unsigned char> decrypt_store(const EncryptedStore& store, const SecretKey& key);

void save_encrypted_store(const EncryptedStore& store, const std::string& path);
EncryptedStore load_encrypted_store(const std::string& path);

// Keyed-hash pseudonym for a user id: stable under one key, unlinkable
// across keys.
std::string pseudonymize(const std::string& user_id, const SecretKey& key);

// Replaces user ids by pseudonyms and coarsens timestamps to the start of
// the event's time-of-day bucket within its day. Other fields unchanged.
std::vector<ImpressionEvent> anonymize(const std::vector<ImpressionEvent>& events,
                                       const SecretKey& key);

}  // namespace adseal
