/*
 * Copyright 2026 The typeforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TYPEFORGE_ERRORS_HPP_
#define TYPEFORGE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace typeforge {

// Root of the library error hierarchy. The three direct children map onto
// CLI exit codes: ValidationError -> 2, StaleArtifactError -> 3,
// NumericalError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// A stage output on disk was produced under a different configuration than
// the one currently requested.
class StaleArtifactError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConstantImageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class WindowTooLargeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ImageTooSmallError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TooFewSamplesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyDescriptorSetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateImageIdError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingFileError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NoTestImagesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyMatrixError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ImageTooSmallForPatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace typeforge

#endif  // TYPEFORGE_ERRORS_HPP_
