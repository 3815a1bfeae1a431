#include <fstream>
#include <map>
#include <sstream>

#include "sasv/manifest.hpp"

namespace sasv {

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::io_error, "cannot open manifest: " + path.string());

    Manifest out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        ManifestRow r;
        std::string gender, cls;
        if (!(row >> r.trial_id >> gender >> cls >> r.attack_id))
            fail(Errc::io_error,
                 path.string() + ":" + std::to_string(line_no) + ": expected 4 fields");
        std::string extra;
        if (row >> extra)
            fail(Errc::io_error,
                 path.string() + ":" + std::to_string(line_no) + ": trailing fields");
        if (gender.size() != 1 || (gender[0] != 'm' && gender[0] != 'f' && gender[0] != '-'))
            fail(Errc::io_error,
                 path.string() + ":" + std::to_string(line_no) + ": gender must be m, f or -");
        r.gender = gender[0];
        r.cls = trial_class_from_string(cls);
        if ((r.cls == TrialClass::spoof) == (r.attack_id == "-"))
            fail(Errc::io_error, path.string() + ":" + std::to_string(line_no) +
                                     ": attack id must be - exactly for bona fide rows");
        out.push_back(std::move(r));
    }
    return out;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) fail(Errc::io_error, "cannot write manifest: " + path.string());
    for (const ManifestRow& r : manifest)
        os << r.trial_id << ' ' << r.gender << ' ' << to_string(r.cls) << ' ' << r.attack_id
           << '\n';
    if (!os) fail(Errc::io_error, "write failed: " + path.string());
}

Manifest asvspoof_manifest(const std::filesystem::path& protocol_file,
                           const std::filesystem::path& speaker_gender_map) {
    std::map<std::string, char> genders;
    if (!speaker_gender_map.empty()) {
        std::ifstream gm(speaker_gender_map);
        if (!gm)
            fail(Errc::io_error, "cannot open speaker map: " + speaker_gender_map.string());
        std::string spk, g;
        while (gm >> spk >> g) {
            if (g != "m" && g != "f")
                fail(Errc::io_error, "speaker map gender must be m or f: " + spk);
            genders[spk] = g[0];
        }
    }

    std::ifstream is(protocol_file);
    if (!is) fail(Errc::io_error, "cannot open protocol file: " + protocol_file.string());

    Manifest out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string speaker, file, dash, attack, key;
        if (!(row >> speaker >> file >> dash >> attack >> key))
            fail(Errc::io_error, protocol_file.string() + ":" + std::to_string(line_no) +
                                     ": expected 5 fields");
        ManifestRow r;
        r.trial_id = file;
        const auto it = genders.find(speaker);
        r.gender = it == genders.end() ? '-' : it->second;
        if (key == "bonafide") {
            r.cls = TrialClass::target;
            r.attack_id = "-";
        } else if (key == "spoof") {
            r.cls = TrialClass::spoof;
            r.attack_id = attack;
        } else {
            fail(Errc::io_error, protocol_file.string() + ":" + std::to_string(line_no) +
                                     ": key must be bonafide or spoof");
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace sasv
