#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace autosdt {

// Interpreter-bundled module names (CPython 3.10 sys.stdlib_module_names).
// Imports of these never become install requirements.
inline const std::unordered_set<std::string>& python_stdlib_modules() {
    static const std::unordered_set<std::string> kModules = {
        "__future__", "_abc", "_aix_support", "_ast", "_asyncio", "_bisect", "_blake2",
        "_bootsubprocess", "_bz2", "_codecs", "_codecs_cn", "_codecs_hk", "_codecs_iso2022",
        "_codecs_jp", "_codecs_kr", "_codecs_tw", "_collections", "_collections_abc",
        "_compat_pickle", "_compression", "_contextvars", "_crypt", "_csv", "_ctypes", "_curses",
        "_curses_panel", "_datetime", "_dbm", "_decimal", "_elementtree", "_frozen_importlib",
        "_frozen_importlib_external", "_functools", "_gdbm", "_hashlib", "_heapq", "_imp", "_io",
        "_json", "_locale", "_lsprof", "_lzma", "_markupbase", "_md5", "_msi", "_multibytecodec",
        "_multiprocessing", "_opcode", "_operator", "_osx_support", "_overlapped", "_pickle",
        "_posixshmem", "_posixsubprocess", "_py_abc", "_pydecimal", "_pyio", "_queue", "_random",
        "_scproxy", "_sha1", "_sha256", "_sha3", "_sha512", "_signal", "_sitebuiltins", "_socket",
        "_sqlite3", "_sre", "_ssl", "_stat", "_statistics", "_string", "_strptime", "_struct",
        "_symtable", "_thread", "_threading_local", "_tkinter", "_tracemalloc", "_uuid",
        "_warnings", "_weakref", "_weakrefset", "_winapi", "_zoneinfo", "abc", "aifc",
        "antigravity", "argparse", "array", "ast", "asynchat", "asyncio", "asyncore", "atexit",
        "audioop", "base64", "bdb", "binascii", "binhex", "bisect", "builtins", "bz2", "cProfile",
        "calendar", "cgi", "cgitb", "chunk", "cmath", "cmd", "code", "codecs", "codeop",
        "collections", "colorsys", "compileall", "concurrent", "configparser", "contextlib",
        "contextvars", "copy", "copyreg", "crypt", "csv", "ctypes", "curses", "dataclasses",
        "datetime", "dbm", "decimal", "difflib", "dis", "distutils", "doctest", "email",
        "encodings", "ensurepip", "enum", "errno", "faulthandler", "fcntl", "filecmp",
        "fileinput", "fnmatch", "fractions", "ftplib", "functools", "gc", "genericpath",
        "getopt", "getpass", "gettext", "glob", "graphlib", "grp", "gzip", "hashlib", "heapq",
        "hmac", "html", "http", "idlelib", "imaplib", "imghdr", "imp", "importlib", "inspect",
        "io", "ipaddress", "itertools", "json", "keyword", "lib2to3", "linecache", "locale",
        "logging", "lzma", "mailbox", "mailcap", "marshal", "math", "mimetypes", "mmap",
        "modulefinder", "msilib", "msvcrt", "multiprocessing", "netrc", "nis", "nntplib", "nt",
        "ntpath", "nturl2path", "numbers", "opcode", "operator", "optparse", "os",
        "ossaudiodev", "pathlib", "pdb", "pickle", "pickletools", "pipes", "pkgutil",
        "platform", "plistlib", "poplib", "posix", "posixpath", "pprint", "profile", "pstats",
        "pty", "pwd", "py_compile", "pyclbr", "pydoc", "pydoc_data", "pyexpat", "queue",
        "quopri", "random", "re", "readline", "reprlib", "resource", "rlcompleter", "runpy",
        "sched", "secrets", "select", "selectors", "shelve", "shlex", "shutil", "signal",
        "site", "smtpd", "smtplib", "sndhdr", "socket", "socketserver", "spwd", "sqlite3",
        "sre_compile", "sre_constants", "sre_parse", "ssl", "stat", "statistics", "string",
        "stringprep", "struct", "subprocess", "sunau", "symtable", "sys", "sysconfig",
        "syslog", "tabnanny", "tarfile", "telnetlib", "tempfile", "termios", "textwrap",
        "this", "threading", "time", "timeit", "tkinter", "token", "tokenize", "trace",
        "traceback", "tracemalloc", "tty", "turtle", "turtledemo", "types", "typing",
        "unicodedata", "unittest", "urllib", "uu", "uuid", "venv", "warnings", "wave",
        "weakref", "webbrowser", "winreg", "winsound", "wsgiref", "xdrlib", "xml", "xmlrpc",
        "zipapp", "zipfile", "zipimport", "zlib", "zoneinfo",
    };
    return kModules;
}

// Import name -> installable distribution name for packages common in
// scientific code. Identity entries document the catalog; names absent from
// the table pass through unchanged.
inline const std::unordered_map<std::string, std::string>& import_distribution_map() {
    static const std::unordered_map<std::string, std::string> kMap = {
        // numerics / data frames
        {"numpy", "numpy"}, {"scipy", "scipy"}, {"pandas", "pandas"}, {"polars", "polars"},
        {"numexpr", "numexpr"}, {"bottleneck", "bottleneck"}, {"numba", "numba"},
        {"llvmlite", "llvmlite"}, {"sympy", "sympy"}, {"mpmath", "mpmath"},
        {"pyarrow", "pyarrow"}, {"fastparquet", "fastparquet"}, {"h5py", "h5py"},
        {"tables", "tables"}, {"zarr", "zarr"}, {"numcodecs", "numcodecs"},
        {"xarray", "xarray"}, {"dask", "dask"}, {"distributed", "distributed"}, {"ray", "ray"},
        {"einops", "einops"}, {"uncertainties", "uncertainties"}, {"pint", "pint"},
        {"numpy_financial", "numpy-financial"},
        // machine learning
        {"sklearn", "scikit-learn"}, {"sklearn_extra", "scikit-learn-extra"},
        {"skimage", "scikit-image"}, {"skbio", "scikit-bio"}, {"skopt", "scikit-optimize"},
        {"skmultilearn", "scikit-multilearn"}, {"sksurv", "scikit-survival"},
        {"skfuzzy", "scikit-fuzzy"}, {"allel", "scikit-allel"},
        {"scikit_posthocs", "scikit-posthocs"}, {"imblearn", "imbalanced-learn"},
        {"category_encoders", "category-encoders"}, {"feature_engine", "feature-engine"},
        {"xgboost", "xgboost"}, {"lightgbm", "lightgbm"}, {"catboost", "catboost"},
        {"shap", "shap"}, {"lime", "lime"}, {"eli5", "eli5"}, {"optuna", "optuna"},
        {"hyperopt", "hyperopt"}, {"umap", "umap-learn"}, {"hdbscan", "hdbscan"},
        {"joblib", "joblib"}, {"mlflow", "mlflow"}, {"wandb", "wandb"},
        {"statsmodels", "statsmodels"}, {"patsy", "patsy"}, {"lifelines", "lifelines"},
        {"pingouin", "pingouin"},
        // deep learning
        {"torch", "torch"}, {"torchvision", "torchvision"}, {"torchaudio", "torchaudio"},
        {"torchio", "torchio"}, {"pytorch_lightning", "pytorch-lightning"},
        {"lightning", "lightning"}, {"torch_geometric", "torch-geometric"},
        {"tensorflow", "tensorflow"}, {"tensorboard", "tensorboard"}, {"keras", "keras"},
        {"jax", "jax"}, {"flax", "flax"}, {"dgl", "dgl"}, {"gpytorch", "gpytorch"},
        {"botorch", "botorch"}, {"timm", "timm"}, {"kornia", "kornia"}, {"monai", "monai"},
        {"transformers", "transformers"}, {"datasets", "datasets"}, {"tokenizers", "tokenizers"},
        {"sentence_transformers", "sentence-transformers"},
        {"huggingface_hub", "huggingface-hub"}, {"evaluate", "evaluate"},
        {"stable_baselines3", "stable-baselines3"}, {"gym", "gym"}, {"gymnasium", "gymnasium"},
        {"deepchem", "deepchem"}, {"e3nn", "e3nn"}, {"ax", "ax-platform"},
        {"nevergrad", "nevergrad"}, {"absl", "absl-py"},
        // vision / imaging
        {"cv2", "opencv-python"}, {"PIL", "Pillow"}, {"imageio", "imageio"},
        {"tifffile", "tifffile"}, {"czifile", "czifile"}, {"nd2reader", "nd2reader"},
        {"pydicom", "pydicom"}, {"SimpleITK", "SimpleITK"}, {"itk", "itk"},
        {"nrrd", "pynrrd"}, {"medpy", "MedPy"}, {"albumentations", "albumentations"},
        {"imgaug", "imgaug"}, {"pycocotools", "pycocotools"}, {"mediapipe", "mediapipe"},
        {"face_recognition", "face-recognition"}, {"pytesseract", "pytesseract"},
        {"easyocr", "easyocr"}, {"mmcv", "mmcv"}, {"trimesh", "trimesh"},
        {"open3d", "open3d"}, {"pyvista", "pyvista"}, {"vtk", "vtk"}, {"mayavi", "mayavi"},
        // plotting
        {"matplotlib", "matplotlib"}, {"mpl_toolkits", "matplotlib"}, {"seaborn", "seaborn"},
        {"plotly", "plotly"}, {"bokeh", "bokeh"}, {"altair", "altair"},
        {"wordcloud", "wordcloud"}, {"graphviz", "graphviz"}, {"pygraphviz", "pygraphviz"},
        {"pydot", "pydot"},
        // bioinformatics
        {"Bio", "biopython"}, {"BioSQL", "biopython"}, {"pysam", "pysam"},
        {"pyfaidx", "pyfaidx"}, {"cyvcf2", "cyvcf2"}, {"vcf", "PyVCF"},
        {"pybedtools", "pybedtools"}, {"pyBigWig", "pyBigWig"}, {"HTSeq", "HTSeq"},
        {"deeptools", "deeptools"}, {"gffutils", "gffutils"}, {"intervaltree", "intervaltree"},
        {"dendropy", "dendropy"}, {"ete3", "ete3"}, {"goatools", "goatools"},
        {"gseapy", "gseapy"}, {"mygene", "mygene"}, {"biothings_client", "biothings-client"},
        {"scanpy", "scanpy"}, {"anndata", "anndata"}, {"scvelo", "scvelo"},
        {"squidpy", "squidpy"}, {"biotite", "biotite"}, {"prody", "ProDy"},
        {"msprime", "msprime"}, {"tskit", "tskit"}, {"pyslim", "pyslim"},
        {"chembl_webresource_client", "chembl-webresource-client"},
        // chemistry / materials
        {"rdkit", "rdkit"}, {"openbabel", "openbabel"}, {"ase", "ase"},
        {"pymatgen", "pymatgen"}, {"mdtraj", "mdtraj"}, {"MDAnalysis", "MDAnalysis"},
        {"openmm", "openmm"}, {"simtk", "openmm"}, {"pyscf", "pyscf"}, {"psi4", "psi4"},
        {"cclib", "cclib"}, {"chempy", "chempy"}, {"mendeleev", "mendeleev"},
        {"periodictable", "periodictable"}, {"pubchempy", "PubChemPy"},
        {"qcelemental", "qcelemental"}, {"qcengine", "qcengine"},
        // neuroscience / psychology
        {"nibabel", "nibabel"}, {"nilearn", "nilearn"}, {"nipype", "nipype"}, {"nipy", "nipy"},
        {"dipy", "dipy"}, {"nitime", "nitime"}, {"mne", "mne"}, {"mne_bids", "mne-bids"},
        {"bids", "pybids"}, {"neurokit2", "neurokit2"}, {"brian2", "brian2"}, {"neo", "neo"},
        {"elephant", "elephant"}, {"quantities", "quantities"}, {"psychopy", "psychopy"},
        {"parselmouth", "praat-parselmouth"},
        // geospatial / climate
        {"geopandas", "geopandas"}, {"shapely", "shapely"}, {"fiona", "fiona"},
        {"rasterio", "rasterio"}, {"rioxarray", "rioxarray"}, {"pyproj", "pyproj"},
        {"cartopy", "cartopy"}, {"osgeo", "GDAL"}, {"gdal", "GDAL"}, {"folium", "folium"},
        {"geopy", "geopy"}, {"contextily", "contextily"}, {"osmnx", "osmnx"},
        {"pysal", "pysal"}, {"libpysal", "libpysal"}, {"esda", "esda"}, {"momepy", "momepy"},
        {"geojson", "geojson"}, {"utm", "utm"}, {"haversine", "haversine"},
        {"owslib", "OWSLib"}, {"sentinelsat", "sentinelsat"}, {"earthpy", "earthpy"},
        {"satpy", "satpy"}, {"pyresample", "pyresample"}, {"metpy", "MetPy"},
        {"iris", "scitools-iris"}, {"cftime", "cftime"}, {"cdsapi", "cdsapi"},
        {"cfgrib", "cfgrib"}, {"netCDF4", "netCDF4"},
        // astronomy / physics
        {"astropy", "astropy"}, {"astroquery", "astroquery"}, {"sunpy", "sunpy"},
        {"healpy", "healpy"}, {"emcee", "emcee"}, {"corner", "corner"},
        {"awkward", "awkward"}, {"uproot", "uproot"}, {"iminuit", "iminuit"},
        {"particle", "particle"},
        // statistics / bayesian
        {"pymc", "pymc"}, {"pymc3", "pymc3"}, {"arviz", "arviz"}, {"pystan", "pystan"},
        {"cmdstanpy", "cmdstanpy"},
        // time series / finance
        {"statsforecast", "statsforecast"}, {"prophet", "prophet"},
        {"neuralprophet", "neuralprophet"}, {"pmdarima", "pmdarima"}, {"arch", "arch"},
        {"ruptures", "ruptures"}, {"tslearn", "tslearn"}, {"sktime", "sktime"},
        {"tsfresh", "tsfresh"}, {"pyts", "pyts"}, {"stumpy", "stumpy"}, {"darts", "u8darts"},
        {"filterpy", "filterpy"}, {"pykalman", "pykalman"}, {"yfinance", "yfinance"},
        {"pandas_datareader", "pandas-datareader"}, {"empyrical", "empyrical"},
        {"backtrader", "backtrader"}, {"ccxt", "ccxt"}, {"QuantLib", "QuantLib"},
        // NLP
        {"nltk", "nltk"}, {"spacy", "spacy"}, {"gensim", "gensim"}, {"textblob", "textblob"},
        {"fuzzywuzzy", "fuzzywuzzy"}, {"thefuzz", "thefuzz"}, {"rapidfuzz", "rapidfuzz"},
        {"Levenshtein", "python-Levenshtein"}, {"editdistance", "editdistance"},
        {"ftfy", "ftfy"}, {"emoji", "emoji"}, {"stanza", "stanza"}, {"flair", "flair"},
        {"fasttext", "fasttext"}, {"sacremoses", "sacremoses"}, {"sacrebleu", "sacrebleu"},
        {"rouge", "rouge"}, {"rouge_score", "rouge-score"}, {"bert_score", "bert-score"},
        {"seqeval", "seqeval"}, {"jiwer", "jiwer"}, {"conllu", "conllu"},
        // audio
        {"librosa", "librosa"}, {"soundfile", "soundfile"}, {"audioread", "audioread"},
        {"pydub", "pydub"}, {"python_speech_features", "python-speech-features"},
        // graphs / optimization / solvers
        {"networkx", "networkx"}, {"igraph", "python-igraph"}, {"louvain", "python-louvain"},
        {"community", "python-louvain"}, {"graph_tool", "graph-tool"}, {"cvxpy", "cvxpy"},
        {"cvxopt", "cvxopt"}, {"pulp", "PuLP"}, {"pyomo", "Pyomo"}, {"ortools", "ortools"},
        {"z3", "z3-solver"}, {"pysmt", "pysmt"}, {"deap", "deap"}, {"pygad", "pygad"},
        {"pyswarms", "pyswarms"}, {"casadi", "casadi"}, {"control", "control"},
        {"gurobipy", "gurobipy"},
        // serialization / formats / config
        {"yaml", "PyYAML"}, {"ruamel", "ruamel.yaml"}, {"toml", "toml"}, {"tomli", "tomli"},
        {"jsonschema", "jsonschema"}, {"marshmallow", "marshmallow"}, {"cerberus", "cerberus"},
        {"lxml", "lxml"}, {"bs4", "beautifulsoup4"}, {"openpyxl", "openpyxl"},
        {"xlrd", "xlrd"}, {"xlwt", "xlwt"}, {"xlsxwriter", "XlsxWriter"},
        {"docx", "python-docx"}, {"pptx", "python-pptx"}, {"fitz", "PyMuPDF"},
        {"PyPDF2", "PyPDF2"}, {"pdfminer", "pdfminer.six"}, {"msgpack", "msgpack"},
        {"google", "protobuf"}, {"grpc", "grpcio"}, {"dateutil", "python-dateutil"},
        {"pytz", "pytz"}, {"tzlocal", "tzlocal"}, {"magic", "python-magic"},
        {"chardet", "chardet"}, {"dotenv", "python-dotenv"},
        {"configargparse", "ConfigArgParse"}, {"pydantic", "pydantic"}, {"attr", "attrs"},
        {"attrs", "attrs"},
        // web / io / db
        {"requests", "requests"}, {"urllib3", "urllib3"}, {"aiohttp", "aiohttp"},
        {"httpx", "httpx"}, {"websocket", "websocket-client"}, {"websockets", "websockets"},
        {"flask", "flask"}, {"django", "django"}, {"fastapi", "fastapi"},
        {"sqlalchemy", "SQLAlchemy"}, {"peewee", "peewee"}, {"pymongo", "pymongo"},
        {"bson", "pymongo"}, {"redis", "redis"}, {"duckdb", "duckdb"},
        {"psycopg2", "psycopg2"}, {"MySQLdb", "mysqlclient"}, {"pyspark", "pyspark"},
        {"boto3", "boto3"}, {"github", "PyGithub"}, {"gitlab", "python-gitlab"},
        {"git", "GitPython"}, {"zmq", "pyzmq"},
        // crypto / security
        {"Crypto", "pycryptodome"}, {"Cryptodome", "pycryptodomex"},
        {"cryptography", "cryptography"}, {"OpenSSL", "pyOpenSSL"}, {"nacl", "PyNaCl"},
        {"jwt", "PyJWT"}, {"jose", "python-jose"},
        // CLI / console
        {"tqdm", "tqdm"}, {"click", "click"}, {"typer", "typer"}, {"fire", "fire"},
        {"rich", "rich"}, {"tabulate", "tabulate"}, {"termcolor", "termcolor"},
        {"colorama", "colorama"}, {"prettytable", "prettytable"}, {"loguru", "loguru"},
        // misc scientific utilities
        {"regex", "regex"}, {"cachetools", "cachetools"}, {"more_itertools", "more-itertools"},
        {"typing_extensions", "typing-extensions"}, {"packaging", "packaging"},
        {"pkg_resources", "setuptools"}, {"setuptools", "setuptools"},
        {"serial", "pyserial"}, {"usb", "pyusb"}, {"noise", "noise"},
    };
    return kMap;
}

// Resolves one top-level import name. Unknown names pass through unchanged so
// niche distributions still land in requirement files.
inline std::string distribution_for_import(const std::string& import_root) {
    auto it = import_distribution_map().find(import_root);
    return it == import_distribution_map().end() ? import_root : it->second;
}

inline bool is_stdlib_module(const std::string& import_root) {
    return python_stdlib_modules().count(import_root) > 0;
}

} // namespace autosdt
