import sys

from whipchain.cli import dispatch

if __name__ == '__main__':
    sys.exit(int(dispatch(sys.argv[1:])))
