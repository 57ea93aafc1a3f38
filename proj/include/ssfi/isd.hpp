#pragma once

#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ssfi/error.hpp"
#include "ssfi/image.hpp"
#include "ssfi/train.hpp"

namespace ssfi {

// Inter-subject dependency matrix. Row i = model trained on subject ids[i],
// column j = evaluated on subject ids[j]'s full labeled data (train + test
// periods alike, diagonal included). Each model normalizes foreign data with
// its own stored training statistics; nothing forces symmetry.
struct IsdMatrix {
    std::vector<int> subject_ids;
    std::vector<double> accuracies;  // row-major [n x n]

    int n() const { return static_cast<int>(subject_ids.size()); }
    double& at(int i, int j) { return accuracies[static_cast<std::size_t>(i) * n() + j]; }
    double at(int i, int j) const { return accuracies[static_cast<std::size_t>(i) * n() + j]; }
};

struct SubjectData {
    int subject_id = 0;
    std::vector<SsfiSample> samples;  // full data, all task periods
};

inline IsdMatrix isd_matrix(std::span<CnnModel<float>> models,
                            std::span<const SubjectData> datasets) {
    if (models.size() != datasets.size())
        throw argument_error("need one model per subject dataset");
    const int n = static_cast<int>(models.size());

    IsdMatrix m;
    m.subject_ids.reserve(n);
    for (const auto& d : datasets) {
        if (d.samples.empty())
            throw argument_error("subject " + std::to_string(d.subject_id) + " has no data");
        m.subject_ids.push_back(d.subject_id);
    }
    m.accuracies.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m.at(i, j) = evaluate(models[i], datasets[j].samples).accuracy;
        }
    }
    return m;
}

// Mean accuracy of everyone else's models on subject j's data (diagonal
// excluded).
inline std::vector<double> subject_averages(const IsdMatrix& m) {
    const int n = m.n();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i != j) acc += m.at(i, j);
        }
        out[j] = acc / (n - 1);
    }
    return out;
}

// Mean accuracy of model i on everyone else's data (diagonal excluded).
inline std::vector<double> model_averages(const IsdMatrix& m) {
    const int n = m.n();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i != j) acc += m.at(i, j);
        }
        out[i] = acc / (n - 1);
    }
    return out;
}

inline void save_isd_csv(const IsdMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << "model/subject";
    for (int id : m.subject_ids) out << ',' << id;
    out << '\n';
    char buf[40];
    for (int i = 0; i < m.n(); ++i) {
        out << m.subject_ids[i];
        for (int j = 0; j < m.n(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.9g", m.at(i, j));
            out << buf;
        }
        out << '\n';
    }
}

inline IsdMatrix load_isd_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty ISD file");
    IsdMatrix m;
    auto header = detail::split_csv_row(line);
    for (std::size_t i = 1; i < header.size(); ++i) m.subject_ids.push_back(std::stoi(header[i]));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_row(line);
        if (cells.size() != m.subject_ids.size() + 1)
            throw parse_error(path + ": ragged ISD row");
        for (std::size_t j = 1; j < cells.size(); ++j)
            m.accuracies.push_back(std::stod(cells[j]));
    }
    if (m.accuracies.size() != m.subject_ids.size() * m.subject_ids.size())
        throw parse_error(path + ": ISD matrix is not square");
    return m;
}

// Heatmap with accuracies mapped 0..1 onto the diverging palette, one cell
// per entry, scaled up for visibility.
inline void save_isd_heatmap(const IsdMatrix& m, const std::string& path, int cell_px = 16) {
    const int n = m.n();
    Image img(n * cell_px, n * cell_px);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Rgb color = diverging_color(m.at(i, j));
            for (int dy = 0; dy < cell_px; ++dy) {
                for (int dx = 0; dx < cell_px; ++dx) {
                    img.at(i * cell_px + dy, j * cell_px + dx) = color;
                }
            }
        }
    }
    write_ppm(img, path);
}

}  // namespace ssfi
