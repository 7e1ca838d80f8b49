// Copyright 2026 The dictg2p Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dictg2p {

// Little-endian binary readers/writers shared by every snapshot format
// (DGPD dictionaries, DKEY key stores, DGPC checkpoints, DGPA targets).
// Readers throw FormatError on truncation.

void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s);  // u32 length prefix
void write_magic(std::ostream& os, const char magic[4]);

uint32_t read_u32(std::istream& is);
uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);
// Checks the 4-byte magic and the u32 version that follows it.
void expect_magic(std::istream& is, const char magic[4], uint32_t version);

// Splits a UTF-8 string into codepoint-sized tokens. Invalid byte sequences
// are passed through one byte at a time rather than rejected.
std::vector<std::string> split_utf8(const std::string& s);

// Tokenization used for sentences and gloss strings alike: split on ASCII
// whitespace when any is present, otherwise split into UTF-8 codepoints.
std::vector<std::string> tokenize_text(const std::string& s);

// Whitespace-only split (phoneme strings are always space-separated).
std::vector<std::string> split_whitespace(const std::string& s);

// FNV-1a, used for config hashes.
uint64_t fnv1a64(const std::string& s);

}  // namespace dictg2p
