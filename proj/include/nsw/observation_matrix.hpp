#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nsw {

/// Read-only view over consecutive rows of a row-major matrix.
class MatrixView {
public:
    MatrixView() = default;
    MatrixView(const double* data, std::size_t rows, std::size_t cols)
        : data_(data), rows_(rows), cols_(cols) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t r) const noexcept {
        return data_[i * cols_ + r];
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_ + i * cols_, cols_};
    }
    [[nodiscard]] const double* data() const noexcept { return data_; }

    /// Rows [begin, begin + count). Throws std::out_of_range past the end.
    [[nodiscard]] MatrixView rows_slice(std::size_t begin, std::size_t count) const;

private:
    const double* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

/// p-dimensional observations in time order. Row i is the observation at
/// time i + 1, column r is variable r. Every entry is finite.
class ObservationMatrix {
public:
    ObservationMatrix() = default;

    /// Zero-filled n x p matrix.
    ObservationMatrix(std::size_t rows, std::size_t cols);

    /// Takes ownership of row-major data. Throws std::invalid_argument if the
    /// size does not match or an entry is NaN/Inf.
    ObservationMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    /// Builds from a list of rows of equal length.
    static ObservationMatrix from_rows(const std::vector<std::vector<double>>& rows);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] double operator()(std::size_t i, std::size_t r) const noexcept {
        return data_[i * cols_ + r];
    }
    /// Unchecked mutable access; callers must keep entries finite.
    [[nodiscard]] double& operator()(std::size_t i, std::size_t r) noexcept {
        return data_[i * cols_ + r];
    }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    [[nodiscard]] MatrixView view() const noexcept { return {data_.data(), rows_, cols_}; }
    [[nodiscard]] MatrixView rows_slice(std::size_t begin, std::size_t count) const {
        return view().rows_slice(begin, count);
    }

    /// Copies rows [begin, begin + count) into a new matrix.
    [[nodiscard]] ObservationMatrix copy_rows(std::size_t begin, std::size_t count) const;

    friend bool operator==(const ObservationMatrix&, const ObservationMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Copies a view into an owning matrix.
[[nodiscard]] ObservationMatrix to_matrix(MatrixView view);

}  // namespace nsw
