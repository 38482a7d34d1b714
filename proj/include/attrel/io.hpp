/*
 * Copyright 2026 The attrel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

namespace attrel {

// Doubles rendered as decimal text with 17 significant digits; round-trips
// every finite double exactly.
std::string format_g17(double v);

// Strict double parser: the whole field must be a finite number.
// Throws InputError mentioning `context` otherwise.
double parse_double(const std::string& field, const std::string& context);

std::vector<std::string> split_tabs(const std::string& line);
std::vector<std::string> split_whitespace(const std::string& line);

// Reads all lines of a text file; throws InputError when the file cannot
// be opened. Strips trailing '\r'.
std::vector<std::string> read_lines(const std::string& path);

// Writes `content` to `path` atomically: temp file in the same directory,
// then rename. A failed run leaves no partial output behind.
void atomic_write_file(const std::string& path, const std::string& content);

// Replaces anything outside [A-Za-z0-9_.-] with '_'; used to derive file
// names from relation names.
std::string sanitize_filename(const std::string& name);

std::string lowercase(const std::string& s);

}  // namespace attrel
