import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        ext_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        cmake_args = [
            f"-DCMAKE_BUILD_TYPE={'Debug' if self.debug else 'Release'}",
            "-DPHASESEG_PYTHON_ONLY=ON",
            f"-DPHASESEG_EXT_OUTPUT_DIR={ext_dir}",
            f"-DPython3_EXECUTABLE={sys.executable}",
        ]
        try:
            import pybind11

            cmake_args.append(f"-Dpybind11_DIR={pybind11.get_cmake_dir()}")
        except ImportError:
            pass

        subprocess.run(["cmake", str(source_dir), *cmake_args], cwd=build_dir, check=True)
        subprocess.run(["cmake", "--build", ".", "--target", "_core"], cwd=build_dir, check=True)


setup(ext_modules=[CMakeExtension("phaseseg._core")], cmdclass={"build_ext": CMakeBuild})
