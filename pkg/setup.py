#!/usr/bin/python3 -O
# vim: fileencoding=utf-8

import os

import setuptools
import setuptools.command.install


# don't import: the package needs numpy and scipy, and there is no need,
# since this is build time and we have source files
def get_console_scripts():
    for filename in os.listdir('./ici/tools'):
        basename, ext = os.path.splitext(os.path.basename(filename))
        if basename == '__init__' or ext != '.py':
            continue
        yield basename.replace('_', '-'), 'ici.tools.{}'.format(basename)

# create simple scripts that run much faster than "console entry points"
class CustomInstall(setuptools.command.install.install):
    def run(self):
        bindir = os.path.join(self.root or '/', 'usr/bin')
        os.makedirs(bindir, exist_ok=True)
        for file, pkg in get_console_scripts():
            path = os.path.join(bindir, file)
            with open(path, 'w') as f:
                f.write(
"""#!/usr/bin/python3
from {} import main
import sys
if __name__ == '__main__':
	sys.exit(main())
""".format(pkg))

            os.chmod(path, 0o755)
        setuptools.command.install.install.run(self)

if __name__ == '__main__':
    setuptools.setup(
        name='ici',
        version=open('version').read().strip(),
        description='Instance credibility inference for few-shot '
            'classification',
        license='LGPL2.1+',
        packages=setuptools.find_packages(exclude=('tests',)),
        python_requires='>=3.6',
        install_requires=[
            'numpy>=1.17',
            'scipy>=1.4',
        ],
        cmdclass={
            'install': CustomInstall,
        },
    )
