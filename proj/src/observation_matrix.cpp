#include "nsw/observation_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nsw {

MatrixView MatrixView::rows_slice(std::size_t begin, std::size_t count) const {
    if (begin > rows_ || count > rows_ - begin) {
        throw std::out_of_range("row slice [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") exceeds " +
                                std::to_string(rows_) + " rows");
    }
    return {data_ + begin * cols_, count, cols_};
}

ObservationMatrix::ObservationMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

ObservationMatrix::ObservationMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix data has " + std::to_string(data_.size()) +
                                    " entries, expected " + std::to_string(rows_ * cols_));
    }
    const auto bad = std::find_if(data_.begin(), data_.end(),
                                  [](double v) { return !std::isfinite(v); });
    if (bad != data_.end()) {
        const auto idx = static_cast<std::size_t>(bad - data_.begin());
        throw std::invalid_argument("non-finite entry at row " + std::to_string(idx / cols_ + 1) +
                                    ", column " + std::to_string(idx % cols_ + 1));
    }
}

ObservationMatrix ObservationMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (row.size() != cols) throw std::invalid_argument("ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return {rows.size(), cols, std::move(data)};
}

ObservationMatrix ObservationMatrix::copy_rows(std::size_t begin, std::size_t count) const {
    return to_matrix(rows_slice(begin, count));
}

ObservationMatrix to_matrix(MatrixView view) {
    std::vector<double> data(view.data(), view.data() + view.rows() * view.cols());
    return {view.rows(), view.cols(), std::move(data)};
}

}  // namespace nsw
